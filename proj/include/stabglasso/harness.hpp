#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <stabglasso/dendro.hpp>
#include <stabglasso/hclust.hpp>
#include <stabglasso/modelselect.hpp>
#include <stabglasso/simgen.hpp>
#include <stabglasso/stability.hpp>

namespace stabglasso {

enum class PipelineKind { dendrogram, clustering, network };

/// One method run on every batch: a dendrogram, a clustering, or a network estimator.
struct Pipeline
{
    PipelineKind kind = PipelineKind::dendrogram;
    Linkage linkage = Linkage::single;
    KRule k_rule;
    /// Network pipelines only; without a linkage step the method is one-step.
    bool two_step = false;
    NetworkRule rule = NetworkRule::bic;
    SelectionConfig config;

    static Pipeline dendrogram(Linkage link);
    static Pipeline clustering(Linkage link, KRule rule);
    static Pipeline one_step(NetworkRule rule, SelectionConfig config = {});
    static Pipeline two_step_network(Linkage link, KRule k_rule, NetworkRule rule, SelectionConfig config = {});

    /// Report label: "SL", "SL-SH", "EBIC", "SL-SH_BIC", "AL-2_sparse".
    std::string id() const;
    /// Name of the pairwise metric: "d_coph", "ARI" or "hamming".
    std::string metric() const;
};

/// What one batch produced.
struct BatchOutcome
{
    std::optional<Dendrogram> dendrogram;
    std::optional<Partition> partition;
    std::optional<GraphEstimate> network;
    /// A selection rule fell back (BIC instead of SH, bound never met, empty BoLasso, ...).
    bool flagged = false;
};

BatchOutcome run_pipeline(const Dataset& batch, const Pipeline& pipeline, std::uint64_t seed);

/// Pairwise metric between two outcomes of the same pipeline.
double compare_outcomes(const BatchOutcome& a, const BatchOutcome& b, PipelineKind kind);

struct StabilityReport
{
    std::string method_id;
    std::string metric;
    /// Metric on every unordered pair (i < j), pairs ordered (0,1), (0,2), ..., (1,2), ...
    std::vector<double> pairwise;
    Summary summary;
    /// Per batch, in batch order. Densities only for networks, k only for clusterings.
    std::vector<double> densities;
    std::vector<int> selected_k;
    /// Network versus true adjacency, when the batches carry one.
    std::vector<ConfusionMetrics> truth_metrics;
    /// Clustering versus true partition, when the batches carry one.
    std::vector<double> truth_ari;
    int flagged_batches = 0;
    double wall_seconds = 0.0;
};

/// Pipeline failure on a specific batch.
class HarnessError : public std::runtime_error
{
public:
    HarnessError(int batch, const std::string& what);
    int batch_index() const noexcept { return batch_; }

private:
    int batch_;
};

/**
 * Runs the pipeline on every batch (batch b gets a seed derived from `seed`
 * and b), then compares all V(V-1)/2 pairs. `threads` workers share the
 * batches (0 = hardware concurrency); results do not depend on it.
 * Throws HarnessError naming the lowest failing batch.
 */
StabilityReport pairwise_harness(const std::vector<Dataset>& batches, const Pipeline& pipeline, std::uint64_t seed,
                                 int threads = 1);

/// Pools several reports of the same method (one per covariance model); the summary is over all pooled pairs.
StabilityReport merge_reports(const std::vector<StabilityReport>& reports);

} // namespace stabglasso
