#pragma once
// Independent reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <stabglasso/core.hpp>
#include <stabglasso/dendro.hpp>

namespace oracle {

using stabglasso::Matrix;

/// min over all simple paths i -> j in the complete graph of the largest edge.
inline Matrix minimax_by_path_enumeration(const Matrix& a)
{
    const int p = static_cast<int>(a.rows());
    Matrix u = Matrix::Zero(p, p);
    std::vector<bool> on_path(static_cast<std::size_t>(p), false);
    for (int s = 0; s < p; ++s) {
        for (int t = 0; t < p; ++t) {
            if (s == t) continue;
            double best = std::numeric_limits<double>::infinity();
            std::function<void(int, double)> walk = [&](int v, double worst) {
                if (v == t) {
                    best = std::min(best, worst);
                    return;
                }
                for (int w = 0; w < p; ++w) {
                    if (on_path[static_cast<std::size_t>(w)]) continue;
                    on_path[static_cast<std::size_t>(w)] = true;
                    walk(w, std::max(worst, a(v, w)));
                    on_path[static_cast<std::size_t>(w)] = false;
                }
            };
            std::fill(on_path.begin(), on_path.end(), false);
            on_path[static_cast<std::size_t>(s)] = true;
            walk(s, 0.0);
            u(s, t) = best;
        }
    }
    return u;
}

/// Symmetric matrix with zero diagonal and off-diagonals in (0, 1]. When
/// `levels` > 0 the entries are drawn from {1/levels, ..., 1} to force ties.
inline Matrix random_dissimilarity(int p, std::mt19937_64& rng, int levels = 0)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> level(1, std::max(levels, 1));
    Matrix a = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < j; ++i) {
            double v = levels > 0 ? static_cast<double>(level(rng)) / levels : 1.0 - unit(rng);
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

/// Random valid dendrogram: random pairs of active clusters, heights from a
/// nondecreasing sequence that repeats values with some probability.
inline stabglasso::Dendrogram random_dendrogram(int p, std::mt19937_64& rng)
{
    std::vector<int> active(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) active[static_cast<std::size_t>(i)] = i;
    std::vector<stabglasso::Merge> merges;
    std::uniform_real_distribution<double> step(0.0, 1.0);
    double h = 0.01;
    for (int m = 0; m + 1 < p; ++m) {
        if (step(rng) > 0.3) h += step(rng);
        std::shuffle(active.begin(), active.end(), rng);
        const int a = active.back();
        active.pop_back();
        const int b = active.back();
        active.pop_back();
        merges.push_back({a, b, h});
        active.push_back(p + m);
    }
    return stabglasso::Dendrogram(p, std::move(merges));
}

/// Rand-index style pair counting: numbers of pairs together in both, only
/// in the first, only in the second, and total pairs.
inline double ari_by_pair_counting(const std::vector<int>& x, const std::vector<int>& y)
{
    const std::size_t n = x.size();
    double both = 0, only_x = 0, only_y = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sx = x[i] == x[j];
            const bool sy = y[i] == y[j];
            total += 1;
            if (sx && sy) both += 1;
            else if (sx) only_x += 1;
            else if (sy) only_y += 1;
        }
    }
    const double pairs_x = both + only_x;
    const double pairs_y = both + only_y;
    const double expected = pairs_x * pairs_y / total;
    const double maximum = 0.5 * (pairs_x + pairs_y);
    if (maximum == expected) return 1.0;
    return (both - expected) / (maximum - expected);
}

/// Normalized Hamming distance by enumerating ordered off-diagonal pairs.
inline double hamming_by_counting(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b)
{
    double diff = 0, na = 0, nb = 0;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (i == j) continue;
            diff += a(i, j) != b(i, j) ? 1 : 0;
            na += a(i, j) != 0 ? 1 : 0;
            nb += b(i, j) != 0 ? 1 : 0;
        }
    }
    if (na + nb == 0) return 0.0;
    return 2.0 * diff / (na + nb);
}

/// Random symmetric positive-definite correlation matrix from n Gaussian draws
/// with a random mixing matrix.
inline Matrix random_correlation(int p, int n, std::mt19937_64& rng, double mixing = 0.6)
{
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix mix(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) mix(i, j) = (i == j ? 1.0 : mixing * z(rng) / std::sqrt(p));
    Matrix x(n, p);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < p; ++c) x(r, c) = z(rng);
    x = x * mix.transpose();
    Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix cov = centered.transpose() * centered / (n - 1);
    Eigen::VectorXd d = cov.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = d.asDiagonal() * cov * d.asDiagonal();
    corr = (0.5 * (corr + corr.transpose())).eval();
    corr.diagonal().setOnes();
    return corr;
}

} // namespace oracle
