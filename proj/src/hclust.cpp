#include <stabglasso/hclust.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace stabglasso {

std::string_view to_string(Linkage link)
{
    switch (link) {
    case Linkage::single: return "single";
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::mcquitty: return "mcquitty";
    case Linkage::ward: return "ward";
    }
    return "unknown";
}

std::string_view short_name(Linkage link)
{
    switch (link) {
    case Linkage::single: return "SL";
    case Linkage::average: return "AL";
    case Linkage::complete: return "CL";
    case Linkage::mcquitty: return "ML";
    case Linkage::ward: return "WL";
    }
    return "??";
}

Linkage parse_linkage(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "single" || s == "sl") return Linkage::single;
    if (s == "average" || s == "al") return Linkage::average;
    if (s == "complete" || s == "cl") return Linkage::complete;
    if (s == "mcquitty" || s == "ml") return Linkage::mcquitty;
    if (s == "ward" || s == "wl" || s == "ward.d2") return Linkage::ward;
    throw InvalidArgument("unknown linkage '" + std::string(name) + "'");
}

Dendrogram agglomerate(const DissimilarityMatrix& d, Linkage link, const AgglomerateOptions& options)
{
    const int p = d.size();
    const bool squared = link == Linkage::ward && options.ward == WardVariant::d2;

    // Slot i holds the active cluster whose smallest leaf is i.
    Matrix w = d.matrix();
    if (squared) {
        w = w.cwiseProduct(w);
    }
    std::vector<int> active(static_cast<std::size_t>(p));
    std::vector<int> id(static_cast<std::size_t>(p));
    std::vector<double> count(static_cast<std::size_t>(p), 1.0);
    for (int i = 0; i < p; ++i) {
        active[static_cast<std::size_t>(i)] = i;
        id[static_cast<std::size_t>(i)] = i;
    }

    std::vector<Merge> merges;
    merges.reserve(static_cast<std::size_t>(std::max(0, p - 1)));
    double previous = 0.0;

    while (active.size() > 1) {
        std::size_t bi = 0;
        std::size_t bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < active.size(); ++x) {
            const int i = active[x];
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                const double v = w(i, active[y]);
                if (v < best) {
                    best = v;
                    bi = x;
                    bj = y;
                }
            }
        }
        const int i = active[bi];
        const int j = active[bj];
        const double ni = count[static_cast<std::size_t>(i)];
        const double nj = count[static_cast<std::size_t>(j)];
        const double dij = w(i, j);

        for (const int k : active) {
            if (k == i || k == j) {
                continue;
            }
            const double dik = w(i, k);
            const double djk = w(j, k);
            double updated = 0.0;
            switch (link) {
            case Linkage::single: updated = std::min(dik, djk); break;
            case Linkage::complete: updated = std::max(dik, djk); break;
            case Linkage::average: updated = (ni * dik + nj * djk) / (ni + nj); break;
            case Linkage::mcquitty: updated = 0.5 * (dik + djk); break;
            case Linkage::ward: {
                const double nk = count[static_cast<std::size_t>(k)];
                updated = ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk);
                break;
            }
            }
            w(i, k) = updated;
            w(k, i) = updated;
        }

        double height = squared ? std::sqrt(std::max(dij, 0.0)) : dij;
        // Weighted updates can undershoot the previous height by an ulp.
        height = std::max(height, previous);
        previous = height;

        merges.push_back({id[static_cast<std::size_t>(i)], id[static_cast<std::size_t>(j)], height});
        id[static_cast<std::size_t>(i)] = p + static_cast<int>(merges.size()) - 1;
        count[static_cast<std::size_t>(i)] = ni + nj;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return Dendrogram(p, std::move(merges));
}

DissimilarityMatrix correlation_dissimilarity(const Matrix& s)
{
    if (s.rows() != s.cols() || s.rows() == 0) {
        throw InvalidArgument("correlation matrix must be square and nonempty");
    }
    const Index p = s.rows();
    Matrix a = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
        if (std::abs(s(j, j) - 1.0) > 1e-8) {
            throw InvalidArgument("variable " + std::to_string(j) +
                                  " is not standardized (diagonal entry " + std::to_string(s(j, j)) + ")");
        }
        for (Index i = 0; i < j; ++i) {
            if (std::abs(s(i, j) - s(j, i)) > 1e-10) {
                throw InvalidArgument("correlation matrix is not symmetric");
            }
            double v = 1.0 - std::abs(s(i, j));
            if (v <= 0.0) {
                v = kDissimilarityFloor;
            }
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return DissimilarityMatrix(std::move(a));
}

Partition cut_k(const Dendrogram& t, int k)
{
    const int p = t.leaf_count();
    if (k < 1 || k > p) {
        throw InvalidArgument("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(p) + "]");
    }
    return t.after_merges(p - k);
}

} // namespace stabglasso
