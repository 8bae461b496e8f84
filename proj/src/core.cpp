#include <stabglasso/core.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stabglasso {

Partition::Partition(std::vector<int> labels)
{
    labels_.resize(labels.size());
    // Canonicalize: relabel by order of first appearance.
    std::vector<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int raw = labels[i];
        auto it = std::find_if(seen.begin(), seen.end(),
                               [raw](const auto& e) { return e.first == raw; });
        if (it == seen.end()) {
            seen.emplace_back(raw, static_cast<int>(seen.size()));
            labels_[i] = seen.back().second;
        } else {
            labels_[i] = it->second;
        }
    }
    cluster_count_ = static_cast<int>(seen.size());
}

Partition Partition::singletons(int p)
{
    std::vector<int> l(static_cast<std::size_t>(p));
    std::iota(l.begin(), l.end(), 0);
    return Partition(std::move(l));
}

Partition Partition::single_cluster(int p)
{
    return Partition(std::vector<int>(static_cast<std::size_t>(p), 0));
}

std::vector<std::vector<int>> Partition::clusters() const
{
    std::vector<std::vector<int>> out(static_cast<std::size_t>(cluster_count_));
    for (int i = 0; i < size(); ++i) {
        out[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)])].push_back(i);
    }
    return out;
}

bool Partition::refines(const Partition& coarser) const
{
    if (coarser.size() != size()) {
        return false;
    }
    std::vector<int> image(static_cast<std::size_t>(cluster_count_), -1);
    for (int i = 0; i < size(); ++i) {
        int& img = image[static_cast<std::size_t>((*this)[i])];
        if (img < 0) {
            img = coarser[i];
        } else if (img != coarser[i]) {
            return false;
        }
    }
    return true;
}

UnionFind::UnionFind(int n)
    : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1)
{
    std::iota(parent_.begin(), parent_.end(), 0);
}

int UnionFind::find(int x)
{
    while (parent_[static_cast<std::size_t>(x)] != x) {
        auto& px = parent_[static_cast<std::size_t>(x)];
        px = parent_[static_cast<std::size_t>(px)];
        x = px;
    }
    return x;
}

bool UnionFind::unite(int a, int b)
{
    a = find(a);
    b = find(b);
    if (a == b) {
        return false;
    }
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) {
        std::swap(a, b);
    }
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    return true;
}

Partition UnionFind::partition()
{
    std::vector<int> labels(parent_.size());
    for (std::size_t i = 0; i < parent_.size(); ++i) {
        labels[i] = find(static_cast<int>(i));
    }
    return Partition(std::move(labels));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index)
{
    return splitmix64(splitmix64(splitmix64(base) ^ stream) + index);
}

double max_abs_off_diagonal(const Matrix& m)
{
    double best = 0.0;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (i != j) {
                best = std::max(best, std::abs(m(i, j)));
            }
        }
    }
    return best;
}

Matrix submatrix(const Matrix& m, const std::vector<int>& idx)
{
    const auto k = static_cast<Index>(idx.size());
    Matrix out(k, k);
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < k; ++i) {
            out(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

Matrix select_columns(const Matrix& data, const std::vector<int>& idx)
{
    Matrix out(data.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        out.col(static_cast<Index>(j)) = data.col(idx[j]);
    }
    return out;
}

} // namespace stabglasso
