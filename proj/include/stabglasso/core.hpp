#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stabglasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver stops before meeting its tolerance.
class ConvergenceError : public std::runtime_error
{
public:
    ConvergenceError(const std::string& what, double last_change, int iterations)
        : std::runtime_error(what), last_change_(last_change), iterations_(iterations)
    {}

    double last_change() const noexcept { return last_change_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_change_;
    int iterations_;
};

/**
 * Cluster assignment of p variables.
 *
 * Labels are canonical: cluster ids run 0..k-1 in order of first
 * appearance, so two partitions describing the same grouping compare equal.
 */
class Partition
{
public:
    Partition() = default;
    explicit Partition(std::vector<int> labels);

    static Partition singletons(int p);
    static Partition single_cluster(int p);

    int size() const noexcept { return static_cast<int>(labels_.size()); }
    int cluster_count() const noexcept { return cluster_count_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }

    /// Members of every cluster, each list sorted ascending.
    std::vector<std::vector<int>> clusters() const;

    /// True when every cluster of *this lies inside one cluster of coarser.
    bool refines(const Partition& coarser) const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<int> labels_;
    int cluster_count_ = 0;
};

/// Disjoint-set forest with path halving and union by size.
class UnionFind
{
public:
    explicit UnionFind(int n);

    int find(int x);
    /// Returns false when a and b were already joined.
    bool unite(int a, int b);
    Partition partition();

private:
    std::vector<int> parent_;
    std::vector<int> size_;
};

/// Mixes (base, stream, index) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Largest |M(i,j)| over i != j. Zero for 1x1 matrices.
double max_abs_off_diagonal(const Matrix& m);

/// Rows and columns of m restricted to idx.
Matrix submatrix(const Matrix& m, const std::vector<int>& idx);

/// Columns of data restricted to idx.
Matrix select_columns(const Matrix& data, const std::vector<int>& idx);

} // namespace stabglasso
