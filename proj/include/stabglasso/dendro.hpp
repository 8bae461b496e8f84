#pragma once

#include <vector>

#include <stabglasso/core.hpp>

namespace stabglasso {

/**
 * One agglomeration step. Cluster ids follow the usual linkage-matrix
 * convention: leaves are 0..p-1 and the i-th merge creates cluster p+i.
 * `left` is the input cluster holding the smaller leaf index.
 */
struct Merge
{
    int left;
    int right;
    double height;

    friend bool operator==(const Merge&, const Merge&) = default;
};

/**
 * Merge tree over p leaves.
 *
 * Invariants, checked on construction: exactly p-1 merges, heights finite,
 * nonnegative and nondecreasing, each cluster id consumed at most once, and
 * a single cluster left at the end.
 */
class Dendrogram
{
public:
    Dendrogram(int leaf_count, std::vector<Merge> merges);

    int leaf_count() const noexcept { return leaf_count_; }
    const std::vector<Merge>& merges() const noexcept { return merges_; }

    /// Smallest leaf index inside cluster `id`.
    int min_leaf(int id) const { return min_leaf_[static_cast<std::size_t>(id)]; }

    /// Partition after applying only the first `steps` merges.
    Partition after_merges(int steps) const;

    double max_height() const noexcept;

private:
    int leaf_count_;
    std::vector<Merge> merges_;
    std::vector<int> min_leaf_;
};

/**
 * Symmetric p x p matrix, zero diagonal, strictly positive off-diagonal.
 * Construction rejects anything else.
 */
class DissimilarityMatrix
{
public:
    explicit DissimilarityMatrix(Matrix entries);

    int size() const noexcept { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const noexcept { return entries_; }
    double operator()(Index i, Index j) const { return entries_(i, j); }

private:
    Matrix entries_;
};

/// Absolute tolerance for the strong triangle inequality on ultrametric input.
inline constexpr double kUltrametricTolerance = 1e-9;

/**
 * Matrix satisfying the ultrametric axioms: symmetric, zero diagonal,
 * nonnegative, and d(i,k) <= max(d(i,j), d(j,k)).
 */
class Ultrametric
{
public:
    /// Validates the axioms, allowing `tolerance` slack on the strong triangle inequality.
    explicit Ultrametric(Matrix dist, double tolerance = kUltrametricTolerance);

    int size() const noexcept { return static_cast<int>(dist_.rows()); }
    const Matrix& matrix() const noexcept { return dist_; }
    double operator()(Index i, Index j) const { return dist_(i, j); }
    double max() const noexcept { return dist_.size() == 0 ? 0.0 : dist_.maxCoeff(); }

private:
    struct Trusted {};
    Ultrametric(Matrix dist, Trusted) : dist_(std::move(dist)) {}

    friend Ultrametric minimax_ultrametric(const DissimilarityMatrix&);
    friend Ultrametric dendrogram_to_ultrametric(const Dendrogram&);

    Matrix dist_;
};

/// Largest amount by which d(i,k) exceeds max(d(i,j), d(j,k)); zero for ultrametrics.
double strong_triangle_violation(const Matrix& d);

/// Minimax-path distance: min over paths of the largest edge, via a minimum spanning tree.
Ultrametric minimax_ultrametric(const DissimilarityMatrix& a);

/// Cophenetic matrix: u(i,j) is the height of the lowest merge joining i and j.
Ultrametric dendrogram_to_ultrametric(const Dendrogram& t);

/**
 * Dendrogram whose cophenetic matrix is exactly `u`. Merges at equal height
 * are ordered by (min leaf of left, min leaf of right).
 * Throws InvalidArgument on zero distances between distinct points.
 */
Dendrogram ultrametric_to_dendrogram(const Ultrametric& u);

/**
 * Single-linkage merge tree of an arbitrary dissimilarity, built from its
 * minimum spanning tree. Shares the tie order of ultrametric_to_dendrogram.
 */
Dendrogram single_linkage_tree(const DissimilarityMatrix& a);

/// max_{i,j} |u1(i,j) - u2(i,j)|.
double cophenetic_distance(const Dendrogram& t1, const Dendrogram& t2);
double cophenetic_distance(const Ultrametric& u1, const Ultrametric& u2);

/// Cophenetic distance after dividing each ultrametric by its maximum.
double normalized_cophenetic_distance(const Dendrogram& t1, const Dendrogram& t2);
double normalized_cophenetic_distance(const Ultrametric& u1, const Ultrametric& u2);

/// Classes of the relation u(i,j) <= h.
Partition cut_at_height(const Dendrogram& t, double h);

} // namespace stabglasso
