#pragma once

#include <string>
#include <string_view>

#include <stabglasso/dendro.hpp>

namespace stabglasso {

enum class Linkage { single, average, complete, mcquitty, ward };

/// Ward variants: `d2` runs the recurrence on squared dissimilarities and
/// reports square-rooted heights; `d` runs it on the raw values.
enum class WardVariant { d2, d };

struct AgglomerateOptions
{
    WardVariant ward = WardVariant::d2;
};

std::string_view to_string(Linkage link);
/// Accepts "single", "average", "complete", "mcquitty", "ward" and the
/// abbreviations SL, AL, CL, ML, WL (case-insensitive).
Linkage parse_linkage(std::string_view name);
/// Two-letter label used in report rows (SL, AL, ...).
std::string_view short_name(Linkage link);

/**
 * Bottom-up agglomeration with Lance-Williams updates. Nearest-pair ties go
 * to the lexicographically smallest (min leaf of cluster 1, min leaf of
 * cluster 2). O(p^3) time, O(p^2) memory.
 */
Dendrogram agglomerate(const DissimilarityMatrix& d, Linkage link,
                       const AgglomerateOptions& options = {});

/// 1 - |S| off the diagonal; exact zeros (|S_ij| >= 1) are clamped to kDissimilarityFloor.
DissimilarityMatrix correlation_dissimilarity(const Matrix& s);

inline constexpr double kDissimilarityFloor = 1e-12;

/// Partition with k clusters, obtained by undoing the last k-1 merges.
Partition cut_k(const Dendrogram& t, int k);

} // namespace stabglasso
