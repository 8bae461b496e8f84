#pragma once

#include <vector>

#include <stabglasso/core.hpp>
#include <stabglasso/glasso.hpp>

namespace stabglasso {

/// Adjusted Rand index from the contingency table. Returns 1 when both
/// partitions are trivial in the same way (maximum index equals its expectation).
double adjusted_rand_index(const Partition& a, const Partition& b);

/// 2 |A1 - A2|_1 / (|A1|_1 + |A2|_1) over off-diagonal entries; 0 when both are empty.
double normalized_hamming(const Adjacency& a, const Adjacency& b);
double normalized_hamming(const GraphEstimate& a, const GraphEstimate& b);

struct ConfusionMetrics
{
    int true_positives = 0;
    int false_positives = 0;
    int true_negatives = 0;
    int false_negatives = 0;
    double precision = 1.0;
    double recall = 1.0;
    double specificity = 1.0;
    double fdr = 0.0;
    double density = 0.0;
    /// Set when no edge was predicted, so precision = 1 and fdr = 0 by convention.
    bool vacuous_precision = false;
};

/// Counts over unordered off-diagonal pairs. Empty denominators give 1 for
/// precision, recall and specificity, and 0 for fdr.
ConfusionMetrics confusion_metrics(const Adjacency& estimate, const Adjacency& truth);

struct Summary
{
    double mean = 0.0;
    /// Sample standard deviation (divisor count - 1); 0 for a single value.
    double sd = 0.0;
    int count = 0;
};

/// Mean and sd, summed in index order. An empty input gives NaN for both.
Summary summarize(const std::vector<double>& values);

} // namespace stabglasso
