#include <stabglasso/stability.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

namespace stabglasso {

namespace {

double choose2(double x) { return 0.5 * x * (x - 1.0); }

void require_same_size(const Adjacency& a, const Adjacency& b, const char* what)
{
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw InvalidArgument(std::string(what) + ": adjacency sizes differ (" + std::to_string(a.rows()) +
                              " vs " + std::to_string(b.rows()) + ")");
    }
}

} // namespace

double adjusted_rand_index(const Partition& a, const Partition& b)
{
    if (a.size() != b.size()) {
        throw InvalidArgument("adjusted_rand_index: partitions cover " + std::to_string(a.size()) + " and " +
                              std::to_string(b.size()) + " elements");
    }
    std::map<std::pair<int, int>, double> cells;
    std::vector<double> rows(static_cast<std::size_t>(a.cluster_count()), 0.0);
    std::vector<double> cols(static_cast<std::size_t>(b.cluster_count()), 0.0);
    for (int i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}] += 1.0;
        rows[static_cast<std::size_t>(a[i])] += 1.0;
        cols[static_cast<std::size_t>(b[i])] += 1.0;
    }
    double index = 0.0;
    for (const auto& [key, count] : cells) {
        index += choose2(count);
    }
    double sum_rows = 0.0;
    double sum_cols = 0.0;
    for (double r : rows) sum_rows += choose2(r);
    for (double c : cols) sum_cols += choose2(c);
    const double total = choose2(static_cast<double>(a.size()));
    if (total == 0.0) {
        return 1.0;
    }
    const double expected = sum_rows * sum_cols / total;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) {
        return 1.0;
    }
    return (index - expected) / (maximum - expected);
}

double normalized_hamming(const Adjacency& a, const Adjacency& b)
{
    require_same_size(a, b, "normalized_hamming");
    long diff = 0;
    long na = 0;
    long nb = 0;
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            const bool ea = a(i, j) != 0;
            const bool eb = b(i, j) != 0;
            diff += ea != eb ? 1 : 0;
            na += ea ? 1 : 0;
            nb += eb ? 1 : 0;
        }
    }
    if (na + nb == 0) {
        return 0.0;
    }
    return 2.0 * static_cast<double>(diff) / static_cast<double>(na + nb);
}

double normalized_hamming(const GraphEstimate& a, const GraphEstimate& b)
{
    return normalized_hamming(a.adjacency, b.adjacency);
}

ConfusionMetrics confusion_metrics(const Adjacency& estimate, const Adjacency& truth)
{
    require_same_size(estimate, truth, "confusion_metrics");
    ConfusionMetrics m;
    for (Index j = 0; j < truth.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            const bool e = estimate(i, j) != 0;
            const bool t = truth(i, j) != 0;
            if (e && t) ++m.true_positives;
            else if (e) ++m.false_positives;
            else if (t) ++m.false_negatives;
            else ++m.true_negatives;
        }
    }
    const double tp = m.true_positives;
    const double fp = m.false_positives;
    const double tn = m.true_negatives;
    const double fn = m.false_negatives;
    if (tp + fp > 0) {
        m.precision = tp / (tp + fp);
        m.fdr = fp / (tp + fp);
    } else {
        m.vacuous_precision = true;
    }
    if (tp + fn > 0) m.recall = tp / (tp + fn);
    if (tn + fp > 0) m.specificity = tn / (tn + fp);
    const double pairs = tp + fp + tn + fn;
    m.density = pairs > 0 ? (tp + fp) / pairs : 0.0;
    return m;
}

Summary summarize(const std::vector<double>& values)
{
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        s.sd = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

} // namespace stabglasso
