#include <stabglasso/dendro.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stabglasso {

namespace {

struct Edge
{
    int a;
    int b;
    double w;
};

// Prim on a dense matrix, O(p^2).
std::vector<Edge> minimum_spanning_tree(const Matrix& d)
{
    const int p = static_cast<int>(d.rows());
    std::vector<Edge> tree;
    if (p < 2) {
        return tree;
    }
    tree.reserve(static_cast<std::size_t>(p - 1));
    std::vector<bool> in_tree(static_cast<std::size_t>(p), false);
    std::vector<double> best(static_cast<std::size_t>(p), std::numeric_limits<double>::infinity());
    std::vector<int> via(static_cast<std::size_t>(p), -1);
    int current = 0;
    in_tree[0] = true;
    for (int step = 1; step < p; ++step) {
        int next = -1;
        double next_w = std::numeric_limits<double>::infinity();
        for (int j = 0; j < p; ++j) {
            if (in_tree[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double w = d(current, j);
            if (w < best[static_cast<std::size_t>(j)]) {
                best[static_cast<std::size_t>(j)] = w;
                via[static_cast<std::size_t>(j)] = current;
            }
            if (best[static_cast<std::size_t>(j)] < next_w) {
                next_w = best[static_cast<std::size_t>(j)];
                next = j;
            }
        }
        in_tree[static_cast<std::size_t>(next)] = true;
        tree.push_back({via[static_cast<std::size_t>(next)], next, next_w});
        current = next;
    }
    return tree;
}

// Kruskal-style replay of a spanning forest into merges. Edges of equal weight
// are resolved component by component, clusters merged in min-leaf order.
Dendrogram merges_from_tree(int p, std::vector<Edge> edges)
{
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& x, const Edge& y) { return x.w < y.w; });

    UnionFind uf(p);
    std::vector<int> cluster_id(static_cast<std::size_t>(p));
    std::vector<int> min_leaf(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        cluster_id[static_cast<std::size_t>(i)] = i;
        min_leaf[static_cast<std::size_t>(i)] = i;
    }

    std::vector<Merge> merges;
    merges.reserve(static_cast<std::size_t>(std::max(p - 1, 0)));

    std::size_t g = 0;
    while (g < edges.size()) {
        std::size_t end = g;
        while (end < edges.size() && edges[end].w == edges[g].w) {
            ++end;
        }
        const double h = edges[g].w;

        // Components formed by this weight class, over current cluster roots.
        std::vector<int> roots;
        for (std::size_t e = g; e < end; ++e) {
            roots.push_back(uf.find(edges[e].a));
            roots.push_back(uf.find(edges[e].b));
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
        auto local = [&](int r) {
            return static_cast<int>(std::lower_bound(roots.begin(), roots.end(), r) - roots.begin());
        };
        UnionFind group(static_cast<int>(roots.size()));
        for (std::size_t e = g; e < end; ++e) {
            group.unite(local(uf.find(edges[e].a)), local(uf.find(edges[e].b)));
        }
        std::vector<std::vector<int>> comps(roots.size());
        for (std::size_t r = 0; r < roots.size(); ++r) {
            comps[static_cast<std::size_t>(group.find(static_cast<int>(r)))].push_back(roots[r]);
        }
        std::erase_if(comps, [](const auto& c) { return c.size() < 2; });
        auto by_min_leaf = [&](int x, int y) {
            return min_leaf[static_cast<std::size_t>(x)] < min_leaf[static_cast<std::size_t>(y)];
        };
        for (auto& c : comps) {
            std::sort(c.begin(), c.end(), by_min_leaf);
        }
        std::sort(comps.begin(), comps.end(),
                  [&](const auto& x, const auto& y) { return by_min_leaf(x.front(), y.front()); });

        for (const auto& c : comps) {
            int acc = c.front();
            for (std::size_t k = 1; k < c.size(); ++k) {
                const int other = c[k];
                merges.push_back({cluster_id[static_cast<std::size_t>(acc)],
                                  cluster_id[static_cast<std::size_t>(other)], h});
                const int keep_leaf = min_leaf[static_cast<std::size_t>(acc)];
                uf.unite(acc, other);
                acc = uf.find(acc);
                cluster_id[static_cast<std::size_t>(acc)] = p + static_cast<int>(merges.size()) - 1;
                min_leaf[static_cast<std::size_t>(acc)] = keep_leaf;
            }
        }
        g = end;
    }
    return Dendrogram(p, std::move(merges));
}

bool nearly_equal(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

Dendrogram::Dendrogram(int leaf_count, std::vector<Merge> merges)
    : leaf_count_(leaf_count), merges_(std::move(merges))
{
    if (leaf_count_ < 1) {
        throw InvalidArgument("dendrogram needs at least one leaf");
    }
    const auto p = static_cast<std::size_t>(leaf_count_);
    if (merges_.size() != p - 1) {
        throw InvalidArgument("dendrogram over " + std::to_string(p) + " leaves needs " +
                              std::to_string(p - 1) + " merges, got " +
                              std::to_string(merges_.size()));
    }
    min_leaf_.resize(2 * p - 1);
    for (std::size_t i = 0; i < p; ++i) {
        min_leaf_[i] = static_cast<int>(i);
    }
    std::vector<bool> used(2 * p - 1, false);
    double previous = 0.0;
    for (std::size_t i = 0; i < merges_.size(); ++i) {
        Merge& m = merges_[i];
        const int limit = static_cast<int>(p + i);
        if (m.left < 0 || m.right < 0 || m.left >= limit || m.right >= limit || m.left == m.right) {
            throw InvalidArgument("merge " + std::to_string(i) + " references an invalid cluster id");
        }
        if (used[static_cast<std::size_t>(m.left)] || used[static_cast<std::size_t>(m.right)]) {
            throw InvalidArgument("merge " + std::to_string(i) + " reuses a consumed cluster");
        }
        if (!std::isfinite(m.height) || m.height < 0.0) {
            throw InvalidArgument("merge " + std::to_string(i) + " has an invalid height");
        }
        if (m.height < previous) {
            throw InvalidArgument("merge heights must be nondecreasing (merge " +
                                  std::to_string(i) + ")");
        }
        previous = m.height;
        if (min_leaf_[static_cast<std::size_t>(m.right)] < min_leaf_[static_cast<std::size_t>(m.left)]) {
            std::swap(m.left, m.right);
        }
        used[static_cast<std::size_t>(m.left)] = true;
        used[static_cast<std::size_t>(m.right)] = true;
        min_leaf_[p + i] = min_leaf_[static_cast<std::size_t>(m.left)];
    }
}

Partition Dendrogram::after_merges(int steps) const
{
    UnionFind uf(leaf_count_);
    for (int i = 0; i < steps; ++i) {
        const Merge& m = merges_[static_cast<std::size_t>(i)];
        uf.unite(min_leaf(m.left), min_leaf(m.right));
    }
    return uf.partition();
}

double Dendrogram::max_height() const noexcept
{
    return merges_.empty() ? 0.0 : merges_.back().height;
}

DissimilarityMatrix::DissimilarityMatrix(Matrix entries) : entries_(std::move(entries))
{
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
        throw InvalidArgument("dissimilarity matrix must be square and nonempty");
    }
    const Index p = entries_.rows();
    for (Index j = 0; j < p; ++j) {
        if (entries_(j, j) != 0.0) {
            throw InvalidArgument("dissimilarity matrix has nonzero diagonal at " + std::to_string(j));
        }
        for (Index i = 0; i < j; ++i) {
            const double a = entries_(i, j);
            if (!std::isfinite(a) || !nearly_equal(a, entries_(j, i))) {
                throw InvalidArgument("dissimilarity matrix is not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (a <= 0.0) {
                throw InvalidArgument("dissimilarity matrix needs positive off-diagonal entries, got " +
                                      std::to_string(a) + " at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            }
            entries_(j, i) = a;
        }
    }
}

double strong_triangle_violation(const Matrix& d)
{
    const Index p = d.rows();
    double worst = 0.0;
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) {
            const double dij = d(i, j);
            for (Index k = 0; k < p; ++k) {
                worst = std::max(worst, d(i, k) - std::max(dij, d(j, k)));
            }
        }
    }
    return worst;
}

Ultrametric::Ultrametric(Matrix dist, double tolerance) : dist_(std::move(dist))
{
    if (dist_.rows() != dist_.cols() || dist_.rows() == 0) {
        throw InvalidArgument("ultrametric must be square and nonempty");
    }
    const Index p = dist_.rows();
    for (Index j = 0; j < p; ++j) {
        if (dist_(j, j) != 0.0) {
            throw InvalidArgument("ultrametric has nonzero diagonal at " + std::to_string(j));
        }
        for (Index i = 0; i < j; ++i) {
            if (!std::isfinite(dist_(i, j)) || dist_(i, j) < 0.0 || !nearly_equal(dist_(i, j), dist_(j, i))) {
                throw InvalidArgument("ultrametric entry (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is negative or asymmetric");
            }
            dist_(j, i) = dist_(i, j);
        }
    }
    const double v = strong_triangle_violation(dist_);
    if (v > tolerance) {
        throw InvalidArgument("strong triangle inequality violated by " + std::to_string(v));
    }
}

Ultrametric minimax_ultrametric(const DissimilarityMatrix& a)
{
    const int p = a.size();
    const auto tree = minimum_spanning_tree(a.matrix());

    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(p));
    for (const Edge& e : tree) {
        adj[static_cast<std::size_t>(e.a)].emplace_back(e.b, e.w);
        adj[static_cast<std::size_t>(e.b)].emplace_back(e.a, e.w);
    }

    // From every source, walk the tree carrying the largest edge seen so far.
    Matrix u = Matrix::Zero(p, p);
    std::vector<int> stack;
    std::vector<int> parent(static_cast<std::size_t>(p));
    for (int s = 0; s < p; ++s) {
        std::fill(parent.begin(), parent.end(), -1);
        parent[static_cast<std::size_t>(s)] = s;
        stack.assign(1, s);
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (auto [w, weight] : adj[static_cast<std::size_t>(v)]) {
                if (parent[static_cast<std::size_t>(w)] >= 0) {
                    continue;
                }
                parent[static_cast<std::size_t>(w)] = v;
                u(s, w) = std::max(u(s, v), weight);
                stack.push_back(w);
            }
        }
    }
    return Ultrametric(std::move(u), Ultrametric::Trusted{});
}

Ultrametric dendrogram_to_ultrametric(const Dendrogram& t)
{
    const int p = t.leaf_count();
    Matrix u = Matrix::Zero(p, p);
    std::vector<std::vector<int>> members(static_cast<std::size_t>(2 * p - 1));
    for (int i = 0; i < p; ++i) {
        members[static_cast<std::size_t>(i)] = {i};
    }
    for (std::size_t s = 0; s < t.merges().size(); ++s) {
        const Merge& m = t.merges()[s];
        auto& left = members[static_cast<std::size_t>(m.left)];
        auto& right = members[static_cast<std::size_t>(m.right)];
        for (int a : left) {
            for (int b : right) {
                u(a, b) = m.height;
                u(b, a) = m.height;
            }
        }
        auto& merged = members[static_cast<std::size_t>(p) + s];
        merged = std::move(left);
        merged.insert(merged.end(), right.begin(), right.end());
        right.clear();
        right.shrink_to_fit();
    }
    return Ultrametric(std::move(u), Ultrametric::Trusted{});
}

Dendrogram ultrametric_to_dendrogram(const Ultrametric& u)
{
    const int p = u.size();
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < j; ++i) {
            if (u(i, j) <= 0.0) {
                throw InvalidArgument("ultrametric has zero distance between distinct points " +
                                      std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    return merges_from_tree(p, minimum_spanning_tree(u.matrix()));
}

Dendrogram single_linkage_tree(const DissimilarityMatrix& a)
{
    return merges_from_tree(a.size(), minimum_spanning_tree(a.matrix()));
}

double cophenetic_distance(const Ultrametric& u1, const Ultrametric& u2)
{
    if (u1.size() != u2.size()) {
        throw InvalidArgument("cophenetic distance needs equal leaf counts (" +
                              std::to_string(u1.size()) + " vs " + std::to_string(u2.size()) + ")");
    }
    return (u1.matrix() - u2.matrix()).cwiseAbs().maxCoeff();
}

double cophenetic_distance(const Dendrogram& t1, const Dendrogram& t2)
{
    if (t1.leaf_count() != t2.leaf_count()) {
        throw InvalidArgument("cophenetic distance needs equal leaf counts");
    }
    return cophenetic_distance(dendrogram_to_ultrametric(t1), dendrogram_to_ultrametric(t2));
}

double normalized_cophenetic_distance(const Ultrametric& u1, const Ultrametric& u2)
{
    if (u1.size() != u2.size()) {
        throw InvalidArgument("normalized cophenetic distance needs equal leaf counts");
    }
    if (u1.size() == 1) {
        return 0.0;
    }
    const double m1 = u1.max();
    const double m2 = u2.max();
    if (m1 <= 0.0 || m2 <= 0.0) {
        throw InvalidArgument("normalized cophenetic distance is undefined for an all-zero ultrametric");
    }
    return (u1.matrix() / m1 - u2.matrix() / m2).cwiseAbs().maxCoeff();
}

double normalized_cophenetic_distance(const Dendrogram& t1, const Dendrogram& t2)
{
    if (t1.leaf_count() != t2.leaf_count()) {
        throw InvalidArgument("normalized cophenetic distance needs equal leaf counts");
    }
    return normalized_cophenetic_distance(dendrogram_to_ultrametric(t1), dendrogram_to_ultrametric(t2));
}

Partition cut_at_height(const Dendrogram& t, double h)
{
    const auto& m = t.merges();
    const auto applied = std::upper_bound(m.begin(), m.end(), h,
                                          [](double x, const Merge& mg) { return x < mg.height; }) -
                         m.begin();
    return t.after_merges(static_cast<int>(applied));
}

} // namespace stabglasso
