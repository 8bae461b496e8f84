#include <stabglasso/modelselect.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include <stabglasso/simgen.hpp>

namespace stabglasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Seed streams for the resampling procedures.
constexpr std::uint64_t kStarsStream = 11;
constexpr std::uint64_t kFoldStream = 12;
constexpr std::uint64_t kBootstrapStream = 13;
constexpr std::uint64_t kSubsampleStream = 14;
constexpr std::uint64_t kModuleStream = 15;

// Conditional variances below this make a block covariance numerically singular.
constexpr double kPivotFloor = 1e-10;

std::string lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<double> descending(std::vector<double> grid)
{
    if (grid.empty()) {
        throw InvalidArgument("lambda grid is empty");
    }
    for (double v : grid) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("lambda grid values must be finite and nonnegative");
        }
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    return grid;
}

// log det of a correlation block; nullopt when singular or too large for n.
std::optional<double> block_log_det(const Matrix& r, const std::vector<int>& members, int n)
{
    const auto m = static_cast<int>(members.size());
    if (m == 1) {
        return std::log(r(members[0], members[0]));
    }
    if (m >= n) {
        return std::nullopt;
    }
    Eigen::LLT<Matrix> llt(submatrix(r, members));
    if (llt.info() != Eigen::Success) {
        return std::nullopt;
    }
    const Vector d = llt.matrixLLT().diagonal();
    if (d.array().square().minCoeff() <= kPivotFloor) {
        return std::nullopt;
    }
    return 2.0 * d.array().log().sum();
}

Matrix standardized_covariance(const Matrix& data)
{
    if (data.rows() < 2) {
        throw InvalidArgument("need at least two observations");
    }
    Matrix centered = data.rowwise() - data.colwise().mean();
    Matrix r = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
    return (0.5 * (r + r.transpose())).eval();
}

double gaussian_constant(int p) { return p * (1.0 + std::log(2.0 * std::numbers::pi)); }

ClusterSelection pick_min(std::vector<ClusterModelScore> scores)
{
    ClusterSelection out;
    const ClusterModelScore* best = nullptr;
    // Scores run from k = p down to 1, so strict < keeps the larger k on ties.
    for (const auto& s : scores) {
        if (!s.feasible) continue;
        if (best == nullptr || s.criterion_value < best->criterion_value) {
            best = &s;
        }
    }
    if (best == nullptr) {
        throw InvalidArgument("no cut of the dendrogram has a nonsingular block-diagonal covariance");
    }
    out.partition = best->partition;
    out.k = best->k;
    out.scores = std::move(scores);
    return out;
}

std::vector<int> random_subset(int n, int size, std::mt19937_64& rng)
{
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(size));
    std::sort(rows.begin(), rows.end());
    return rows;
}

// Solves along a sequence of penalties, warm-starting each fit from the last success.
class PathSolver
{
public:
    PathSolver(const Matrix& s, const SolverConfig& solver) : s_(s), solver_(solver) {}

    std::optional<GraphEstimate> solve(double lambda)
    {
        GlassoOptions opts = solver_.glasso;
        opts.warm_start = warm_ ? &w_ : nullptr;
        opts.warm_precision = warm_ ? &theta_ : nullptr;
        try {
            GraphEstimate est;
            if (solver_.two_step) {
                est = glasso_two_step(s_, lambda, opts);
                w_ = est.precision.inverse();
            } else {
                auto fit = glasso_fit(s_, lambda, opts);
                est = std::move(fit.estimate);
                w_ = std::move(fit.covariance);
            }
            theta_ = est.precision;
            warm_ = true;
            return est;
        } catch (const ConvergenceError&) {
            return std::nullopt;
        } catch (const InvalidArgument&) {
            // Unpenalized fits on singular covariances.
            if (lambda == 0.0) return std::nullopt;
            throw;
        }
    }

private:
    const Matrix& s_;
    const SolverConfig& solver_;
    Matrix w_;
    Matrix theta_;
    bool warm_ = false;
};

std::optional<GraphEstimate> try_solve(const Matrix& s, double lambda, const SolverConfig& solver)
{
    return PathSolver(s, solver).solve(lambda);
}

double safe_loglik(const Matrix& s, const GraphEstimate& est, int n)
{
    try {
        return gaussian_loglik(s, est.precision, n);
    } catch (const InvalidArgument&) {
        return -kInf;
    }
}

GraphEstimate restrict_to_support(GraphEstimate est, const Adjacency& keep)
{
    for (Index j = 0; j < keep.cols(); ++j) {
        for (Index i = 0; i < keep.rows(); ++i) {
            if (i != j && keep(i, j) == 0) est.precision(i, j) = 0.0;
        }
    }
    est.adjacency = keep;
    return est;
}

struct CrossValidation
{
    std::vector<double> loss;
    // estimates[v][l]: fold-complement fit at grid point l.
    std::vector<std::vector<std::optional<GraphEstimate>>> estimates;
};

CrossValidation cross_validate(const Matrix& data, const std::vector<double>& grid, int folds, std::uint64_t seed,
                               const SolverConfig& solver)
{
    const int n = static_cast<int>(data.rows());
    if (folds < 2 || folds > n / 2) {
        throw InvalidArgument("cross-validation needs 2 <= folds <= n/2 (folds=" + std::to_string(folds) +
                              ", n=" + std::to_string(n) + ")");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, kFoldStream, 0));
    std::shuffle(order.begin(), order.end(), rng);

    CrossValidation cv;
    cv.loss.assign(grid.size(), 0.0);
    for (int v = 0; v < folds; ++v) {
        std::vector<int> train;
        std::vector<int> test;
        for (int i = 0; i < n; ++i) {
            (i % folds == v ? test : train).push_back(order[static_cast<std::size_t>(i)]);
        }
        const Matrix x_train = select_rows(data, train);
        const Matrix r_train = sample_correlation(x_train);

        // Held-out rows scaled with the training moments.
        const Eigen::RowVectorXd mean = x_train.colwise().mean();
        const Eigen::RowVectorXd sd =
            ((x_train.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(x_train.rows() - 1))
                .cwiseSqrt();
        Matrix x_test = select_rows(data, test);
        x_test = ((x_test.rowwise() - mean).array().rowwise() / sd.array()).matrix();
        const Matrix s_test = x_test.transpose() * x_test / static_cast<double>(x_test.rows());

        auto path = solve_path(r_train, grid, solver);
        for (std::size_t l = 0; l < grid.size(); ++l) {
            if (!path[l]) {
                cv.loss[l] = kInf;
                continue;
            }
            cv.loss[l] -= safe_loglik(s_test, *path[l], static_cast<int>(test.size()));
        }
        cv.estimates.push_back(std::move(path));
    }
    return cv;
}

std::size_t argmin_prefer_first(const std::vector<double>& values)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[best]) best = i;
    }
    return best;
}

LambdaScore score_at(const Matrix& s, int n, const GraphEstimate& est, double lambda)
{
    LambdaScore sc;
    sc.lambda = lambda;
    sc.loglik = safe_loglik(s, est, n);
    sc.edge_count = est.edge_count();
    return sc;
}

GraphEstimate solve_or_throw(const Matrix& s, double lambda, const SolverConfig& solver)
{
    auto est = try_solve(s, lambda, solver);
    if (!est) {
        throw ConvergenceError("graphical lasso failed at the selected lambda " + std::to_string(lambda), 0.0,
                               solver.glasso.max_iter);
    }
    return std::move(*est);
}

int default_subsample_size(int n)
{
    return std::min(static_cast<int>(std::floor(10.0 * std::sqrt(static_cast<double>(n)))), n - 1);
}

} // namespace

// ---------------------------------------------------------------------------

ClusterLoglik cluster_loglik(const Matrix& data, const Partition& partition)
{
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    if (partition.size() != p) {
        throw InvalidArgument("partition covers " + std::to_string(partition.size()) + " variables, data has " +
                              std::to_string(p));
    }
    const Matrix r = standardized_covariance(data);
    ClusterLoglik out;
    double log_det = 0.0;
    for (const auto& block : partition.clusters()) {
        const auto m = static_cast<int>(block.size());
        out.dim += m * (m + 1) / 2;
        const auto ld = block_log_det(r, block, n);
        if (!ld) {
            out.feasible = false;
            continue;
        }
        log_det += *ld;
    }
    out.loglik = out.feasible ? -0.5 * n * (log_det + gaussian_constant(p)) : -kInf;
    return out;
}

std::vector<ClusterModelScore> score_cuts(const Matrix& data, const Dendrogram& t)
{
    const int n = static_cast<int>(data.rows());
    const int p = t.leaf_count();
    if (data.cols() != p) {
        throw InvalidArgument("dendrogram has " + std::to_string(p) + " leaves, data has " +
                              std::to_string(data.cols()) + " columns");
    }
    const Matrix r = standardized_covariance(data);

    // Cluster id -> members; log det and feasibility tracked per active cluster.
    std::vector<std::vector<int>> members(static_cast<std::size_t>(2 * p - 1));
    std::vector<double> log_det(static_cast<std::size_t>(2 * p - 1), 0.0);
    double total_log_det = 0.0;
    int infeasible = 0;
    int dim = 0;
    for (int i = 0; i < p; ++i) {
        members[static_cast<std::size_t>(i)] = {i};
        const auto ld = block_log_det(r, {i}, n);
        log_det[static_cast<std::size_t>(i)] = ld.value_or(0.0);
        total_log_det += log_det[static_cast<std::size_t>(i)];
        dim += 1;
    }

    std::vector<ClusterModelScore> scores;
    scores.reserve(static_cast<std::size_t>(p));
    auto record = [&](int steps) {
        ClusterModelScore sc;
        sc.k = p - steps;
        sc.partition = t.after_merges(steps);
        sc.dim = dim;
        sc.feasible = infeasible == 0;
        sc.loglik = sc.feasible ? -0.5 * n * (total_log_det + gaussian_constant(p)) : -kInf;
        scores.push_back(std::move(sc));
    };
    record(0);

    std::vector<bool> bad(static_cast<std::size_t>(2 * p - 1), false);
    for (int m = 0; m + 1 < p; ++m) {
        const Merge& mg = t.merges()[static_cast<std::size_t>(m)];
        const auto a = static_cast<std::size_t>(mg.left);
        const auto b = static_cast<std::size_t>(mg.right);
        const auto c = static_cast<std::size_t>(p + m);
        members[c] = members[a];
        members[c].insert(members[c].end(), members[b].begin(), members[b].end());
        std::sort(members[c].begin(), members[c].end());

        const auto sa = static_cast<int>(members[a].size());
        const auto sb = static_cast<int>(members[b].size());
        const auto sc = sa + sb;
        dim += sc * (sc + 1) / 2 - sa * (sa + 1) / 2 - sb * (sb + 1) / 2;

        infeasible -= (bad[a] ? 1 : 0) + (bad[b] ? 1 : 0);
        total_log_det -= log_det[a] + log_det[b];
        // A block containing a singular block is singular too.
        const auto ld = (bad[a] || bad[b]) ? std::nullopt : block_log_det(r, members[c], n);
        if (ld) {
            log_det[c] = *ld;
            total_log_det += *ld;
        } else {
            bad[c] = true;
            ++infeasible;
        }
        members[a].clear();
        members[b].clear();
        record(m + 1);
    }
    return scores;
}

ClusterSelection apply_bic(std::vector<ClusterModelScore> scores, int n)
{
    const double log_n = std::log(static_cast<double>(n));
    for (auto& s : scores) {
        s.criterion_value = s.feasible ? -2.0 * s.loglik + s.dim * log_n : kInf;
    }
    auto out = pick_min(std::move(scores));
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
}

ClusterSelection select_k_bic(const Matrix& data, const Dendrogram& t)
{
    return apply_bic(score_cuts(data, t), static_cast<int>(data.rows()));
}

double upper_half_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.empty()) {
        throw InvalidArgument("slope fit needs matching nonempty inputs");
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double mid = 0.5 * (*lo + *hi);
    double sx = 0, sy = 0, count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] >= mid) {
            sx += x[i];
            sy += y[i];
            count += 1;
        }
    }
    const double mx = sx / count;
    const double my = sy / count;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] >= mid) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
    }
    if (sxx == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sxy / sxx;
}

ClusterSelection apply_slope_heuristic(std::vector<ClusterModelScore> scores, int n)
{
    std::vector<double> dims;
    std::vector<double> neg_loglik;
    for (const auto& s : scores) {
        if (!s.feasible) continue;
        dims.push_back(s.dim);
        neg_loglik.push_back(-s.loglik);
    }
    const double slope = dims.size() >= 4 ? upper_half_slope(dims, neg_loglik) : std::nan("");
    if (!(slope < 0.0)) {
        auto out = apply_bic(std::move(scores), n);
        out.fell_back_to_bic = true;
        return out;
    }
    const double kappa = -slope;
    for (auto& s : scores) {
        s.criterion_value = s.feasible ? -s.loglik + 2.0 * kappa * s.dim : kInf;
    }
    auto out = pick_min(std::move(scores));
    out.kappa = kappa;
    return out;
}

ClusterSelection select_k_slope_heuristic(const Matrix& data, const Dendrogram& t)
{
    return apply_slope_heuristic(score_cuts(data, t), static_cast<int>(data.rows()));
}

std::string to_string(const KRule& rule)
{
    switch (rule.kind) {
    case KRuleKind::slope_heuristic: return "SH";
    case KRuleKind::bic: return "BIC";
    case KRuleKind::fixed: return std::to_string(rule.k);
    }
    return "?";
}

KRule parse_k_rule(std::string_view text)
{
    const std::string t = lower(text);
    if (t == "sh" || t == "slope" || t == "slope_heuristic") return KRule::slope_heuristic();
    if (t == "bic") return KRule::bic();
    int k = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
    if (ec == std::errc() && ptr == text.data() + text.size() && k >= 1) return KRule::fixed(k);
    throw InvalidArgument("unknown cluster-count rule '" + std::string(text) + "' (expected SH, BIC or a positive integer)");
}

ClusterSelection cluster_variables(const Matrix& data, Linkage link, const KRule& rule,
                                   const AgglomerateOptions& options)
{
    const Matrix r = sample_correlation(data);
    const Dendrogram t = agglomerate(correlation_dissimilarity(r), link, options);
    switch (rule.kind) {
    case KRuleKind::bic: return select_k_bic(data, t);
    case KRuleKind::slope_heuristic: return select_k_slope_heuristic(data, t);
    case KRuleKind::fixed: {
        ClusterSelection out;
        out.partition = cut_k(t, rule.k);
        out.k = rule.k;
        out.kappa = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    }
    throw InvalidArgument("unknown cluster-count rule");
}

// ---------------------------------------------------------------------------

std::vector<std::optional<GraphEstimate>> solve_path(const Matrix& s, const std::vector<double>& grid,
                                                     const SolverConfig& solver)
{
    std::vector<std::optional<GraphEstimate>> out;
    out.reserve(grid.size());
    PathSolver path(s, solver);
    for (double lambda : grid) {
        out.push_back(path.solve(lambda));
    }
    return out;
}

LambdaSelection select_lambda_ic(const Matrix& s, int n, const std::vector<double>& grid_in, double gamma,
                                 const SolverConfig& solver)
{
    if (n < 1 || gamma < 0.0) {
        throw InvalidArgument("information criterion needs n >= 1 and gamma >= 0");
    }
    const auto grid = descending(grid_in);
    const double log_n = std::log(static_cast<double>(n));
    const double log_p = std::log(static_cast<double>(s.rows()));
    auto path = solve_path(s, grid, solver);

    LambdaSelection out;
    std::optional<std::size_t> best;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        if (!path[l]) continue;
        LambdaScore sc = score_at(s, n, *path[l], grid[l]);
        if (!std::isfinite(sc.loglik)) continue;
        sc.criterion_value = -2.0 * sc.loglik + sc.edge_count * log_n + 4.0 * gamma * sc.edge_count * log_p;
        out.path.push_back(sc);
        if (!best || sc.criterion_value < out.chosen.criterion_value) {
            best = l;
            out.chosen = sc;
        }
    }
    if (!best) {
        throw ConvergenceError("graphical lasso failed at every grid point", 0.0, solver.glasso.max_iter);
    }
    out.estimate = std::move(*path[*best]);
    return out;
}

LambdaSelection select_lambda_stars(const Matrix& data, const std::vector<double>& grid_in, const StarsParams& params,
                                    std::uint64_t seed, const SolverConfig& solver)
{
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    const int b = params.subsample_size > 0 ? params.subsample_size : default_subsample_size(n);
    if (params.subsamples < 2 || b < 2 || b > n) {
        throw InvalidArgument("StARS needs at least 2 subsamples of size in [2, n]");
    }
    const auto grid = descending(grid_in);

    std::vector<Matrix> corr;
    for (int s = 0; s < params.subsamples; ++s) {
        std::mt19937_64 rng(derive_seed(seed, kStarsStream, static_cast<std::uint64_t>(s)));
        corr.push_back(sample_correlation(select_rows(data, random_subset(n, b, rng))));
    }

    std::vector<PathSolver> paths;
    paths.reserve(corr.size());
    for (const auto& r : corr) paths.emplace_back(r, solver);

    const Matrix s_full = sample_correlation(data);
    LambdaSelection out;
    const double pairs = p * (p - 1) / 2.0;
    double monotone = 0.0;
    std::optional<std::size_t> chosen;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        Matrix freq = Matrix::Zero(p, p);
        bool failed = false;
        for (auto& path : paths) {
            auto est = path.solve(grid[l]);
            if (!est) {
                failed = true;
                break;
            }
            freq += est->adjacency.cast<double>();
        }
        // A failed grid point ends the walk like an exceeded bound.
        if (failed) break;
        freq /= static_cast<double>(corr.size());
        double instability = 0.0;
        for (Index j = 0; j < p; ++j) {
            for (Index i = 0; i < j; ++i) {
                instability += 2.0 * freq(i, j) * (1.0 - freq(i, j));
            }
        }
        instability = pairs > 0 ? instability / pairs : 0.0;
        monotone = std::max(monotone, instability);
        LambdaScore sc;
        sc.lambda = grid[l];
        sc.criterion_value = monotone;
        out.path.push_back(sc);
        if (monotone > params.beta) break;
        chosen = l;
    }
    if (!chosen) {
        chosen = grid.size() - 1;
        out.flagged = true;
    }
    out.estimate = solve_or_throw(s_full, grid[*chosen], solver);
    const double crit = *chosen < out.path.size() ? out.path[*chosen].criterion_value : kInf;
    out.chosen = score_at(s_full, n, out.estimate, grid[*chosen]);
    out.chosen.criterion_value = crit;
    return out;
}

double cross_validated_lambda(const Matrix& data, const std::vector<double>& grid_in, int folds, std::uint64_t seed,
                              const SolverConfig& solver)
{
    const auto grid = descending(grid_in);
    const auto cv = cross_validate(data, grid, folds, seed, solver);
    return grid[argmin_prefer_first(cv.loss)];
}

LambdaSelection select_lambda_escv(const Matrix& data, const std::vector<double>& grid_in, const EscvParams& params,
                                   std::uint64_t seed, const SolverConfig& solver)
{
    const int p = static_cast<int>(data.cols());
    const auto grid = descending(grid_in);
    const auto cv = cross_validate(data, grid, params.folds, seed, solver);
    const std::size_t cv_index = argmin_prefer_first(cv.loss);

    const Index pairs = static_cast<Index>(p) * (p - 1) / 2;
    auto off_diagonal = [&](const Matrix& theta) {
        Vector v(pairs);
        Index at = 0;
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < j; ++i) v(at++) = theta(i, j);
        return v;
    };

    LambdaSelection out;
    std::vector<double> es(grid.size(), kInf);
    for (std::size_t l = 0; l <= cv_index; ++l) {
        bool ok = true;
        std::vector<Vector> vecs;
        for (const auto& fold : cv.estimates) {
            if (!fold[l]) {
                ok = false;
                break;
            }
            vecs.push_back(off_diagonal(fold[l]->precision));
        }
        if (ok && pairs > 0) {
            Vector mean = Vector::Zero(pairs);
            for (const auto& v : vecs) mean += v;
            mean /= static_cast<double>(vecs.size());
            const double norm2 = mean.squaredNorm();
            if (norm2 > 0.0) {
                double spread = 0.0;
                for (const auto& v : vecs) spread += (v - mean).squaredNorm();
                es[l] = spread / static_cast<double>(vecs.size()) / norm2;
            }
        }
        LambdaScore sc;
        sc.lambda = grid[l];
        sc.loglik = -cv.loss[l];
        sc.criterion_value = es[l];
        out.path.push_back(sc);
    }
    std::size_t chosen = 0;
    for (std::size_t l = 1; l <= cv_index; ++l) {
        if (es[l] < es[chosen]) chosen = l;
    }
    out.flagged = !std::isfinite(es[chosen]);
    const Matrix s_full = sample_correlation(data);
    out.estimate = solve_or_throw(s_full, grid[chosen], solver);
    out.chosen = score_at(s_full, static_cast<int>(data.rows()), out.estimate, grid[chosen]);
    out.chosen.criterion_value = es[chosen];
    return out;
}

EdgeSelection select_edges_bolasso(const Matrix& data, const std::vector<double>& grid, const BolassoParams& params,
                                   std::uint64_t seed, const SolverConfig& solver)
{
    if (params.resamples < 1 || !(params.freq_threshold > 0.0 && params.freq_threshold <= 1.0)) {
        throw InvalidArgument("BoLasso needs resamples >= 1 and a frequency threshold in (0, 1]");
    }
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    EdgeSelection out;
    out.lambda = cross_validated_lambda(data, grid, params.cv_folds, seed, solver);
    out.frequencies = Matrix::Zero(p, p);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int b = 0; b < params.resamples; ++b) {
        std::mt19937_64 rng(derive_seed(seed, kBootstrapStream, static_cast<std::uint64_t>(b)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        for (int& r : rows) r = pick(rng);
        Matrix r_boot;
        try {
            r_boot = sample_correlation(select_rows(data, rows));
        } catch (const InvalidArgument&) {
            continue; // a resample with a constant column
        }
        auto est = try_solve(r_boot, out.lambda, solver);
        if (!est) continue;
        out.frequencies += est->adjacency.cast<double>();
        ++out.resamples_used;
    }
    if (out.resamples_used == 0) {
        throw ConvergenceError("every bootstrap fit failed", 0.0, solver.glasso.max_iter);
    }
    out.frequencies /= static_cast<double>(out.resamples_used);

    Adjacency keep = Adjacency::Zero(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i)
            if (i != j && out.frequencies(i, j) >= params.freq_threshold - 1e-12) keep(i, j) = 1;
    out.estimate = restrict_to_support(solve_or_throw(sample_correlation(data), out.lambda, solver), keep);
    out.empty = out.estimate.edge_count() == 0;
    return out;
}

int default_edge_target(int p)
{
    return std::max(1, static_cast<int>(std::lround(std::sqrt(0.8 * p))));
}

EdgeSelection select_edges_stability_selection(const Matrix& data, const std::vector<double>& grid_in,
                                               const StabilitySelectionParams& params, std::uint64_t seed,
                                               const SolverConfig& solver)
{
    if (params.subsamples < 2 || !(params.pi_threshold >= 0.0 && params.pi_threshold <= 1.0)) {
        throw InvalidArgument("stability selection needs at least 2 subsamples and pi in [0, 1]");
    }
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    const auto grid = descending(grid_in);
    const int target =
        params.q_target > 0.0 ? std::max(1, static_cast<int>(std::lround(params.q_target))) : default_edge_target(p);

    // Walks down the grid until the edge target is reached.
    auto at_target = [&](const Matrix& r) -> std::pair<double, std::optional<GraphEstimate>> {
        std::optional<GraphEstimate> last;
        double lambda = grid.back();
        PathSolver path(r, solver);
        for (double l : grid) {
            auto est = path.solve(l);
            if (!est) continue;
            lambda = l;
            const bool reached = est->edge_count() >= target;
            last = std::move(est);
            if (reached) break;
        }
        return {lambda, std::move(last)};
    };

    EdgeSelection out;
    out.frequencies = Matrix::Zero(p, p);
    const int half = n / 2;
    if (half < 2) {
        throw InvalidArgument("stability selection needs n >= 4");
    }
    for (int s = 0; s < params.subsamples; ++s) {
        std::mt19937_64 rng(derive_seed(seed, kSubsampleStream, static_cast<std::uint64_t>(s)));
        Matrix r_sub;
        try {
            r_sub = sample_correlation(select_rows(data, random_subset(n, half, rng)));
        } catch (const InvalidArgument&) {
            continue;
        }
        auto [lambda, est] = at_target(r_sub);
        if (!est) continue;
        out.frequencies += est->adjacency.cast<double>();
        ++out.resamples_used;
    }
    if (out.resamples_used == 0) {
        throw ConvergenceError("every subsample fit failed", 0.0, solver.glasso.max_iter);
    }
    out.frequencies /= static_cast<double>(out.resamples_used);

    Adjacency keep = Adjacency::Zero(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i)
            if (i != j && out.frequencies(i, j) >= params.pi_threshold - 1e-12) keep(i, j) = 1;
    auto [lambda, full] = at_target(sample_correlation(data));
    if (!full) {
        throw ConvergenceError("graphical lasso failed on the full data at every grid point", 0.0,
                               solver.glasso.max_iter);
    }
    out.lambda = lambda;
    out.estimate = restrict_to_support(std::move(*full), keep);
    out.empty = out.estimate.edge_count() == 0;
    return out;
}

double sparsest_connected_lambda(const Matrix& s, const std::vector<double>& grid_in)
{
    const auto grid = descending(grid_in);
    for (double l : grid) {
        if (screen_components(s, l).partition.cluster_count() == 1) return l;
    }
    return grid.back();
}

// ---------------------------------------------------------------------------

std::string_view to_string(NetworkRule rule)
{
    switch (rule) {
    case NetworkRule::bic: return "BIC";
    case NetworkRule::ebic: return "EBIC";
    case NetworkRule::stars: return "STARS";
    case NetworkRule::escv: return "ESCV";
    case NetworkRule::bolasso: return "BL";
    case NetworkRule::stability_selection: return "SS";
    case NetworkRule::sparse_max: return "sparse";
    }
    return "?";
}

NetworkRule parse_network_rule(std::string_view text)
{
    const std::string t = lower(text);
    if (t == "bic") return NetworkRule::bic;
    if (t == "ebic") return NetworkRule::ebic;
    if (t == "stars") return NetworkRule::stars;
    if (t == "escv") return NetworkRule::escv;
    if (t == "bl" || t == "bolasso") return NetworkRule::bolasso;
    if (t == "ss" || t == "stability_selection") return NetworkRule::stability_selection;
    if (t == "sparse" || t == "sparse-max" || t == "sparse_max") return NetworkRule::sparse_max;
    throw InvalidArgument("unknown penalty rule '" + std::string(text) + "'");
}

namespace {

struct ModuleFit
{
    GraphEstimate estimate;
    double lambda = 0.0;
    bool flagged = false;
};

ModuleFit fit_module(const Matrix& data, NetworkRule rule, const SelectionConfig& config, std::uint64_t seed)
{
    const Matrix s = sample_correlation(data);
    const int n = static_cast<int>(data.rows());
    const auto grid = lambda_grid(s, config.grid.size, config.grid.ratio);
    ModuleFit out;
    switch (rule) {
    case NetworkRule::bic:
    case NetworkRule::ebic: {
        const double gamma = rule == NetworkRule::ebic ? config.ebic_gamma : 0.0;
        auto sel = select_lambda_ic(s, n, grid, gamma, config.solver);
        out.estimate = std::move(sel.estimate);
        out.lambda = sel.chosen.lambda;
        break;
    }
    case NetworkRule::stars: {
        auto sel = select_lambda_stars(data, grid, config.stars, seed, config.solver);
        out.estimate = std::move(sel.estimate);
        out.lambda = sel.chosen.lambda;
        out.flagged = sel.flagged;
        break;
    }
    case NetworkRule::escv: {
        auto sel = select_lambda_escv(data, grid, config.escv, seed, config.solver);
        out.estimate = std::move(sel.estimate);
        out.lambda = sel.chosen.lambda;
        out.flagged = sel.flagged;
        break;
    }
    case NetworkRule::bolasso: {
        auto sel = select_edges_bolasso(data, grid, config.bolasso, seed, config.solver);
        out.estimate = std::move(sel.estimate);
        out.lambda = sel.lambda;
        out.flagged = sel.empty;
        break;
    }
    case NetworkRule::stability_selection: {
        auto sel = select_edges_stability_selection(data, grid, config.stability_selection, seed, config.solver);
        out.estimate = std::move(sel.estimate);
        out.lambda = sel.lambda;
        out.flagged = sel.empty;
        break;
    }
    case NetworkRule::sparse_max: {
        out.lambda = sparsest_connected_lambda(s, grid);
        out.estimate = solve_or_throw(s, out.lambda, config.solver);
        break;
    }
    }
    return out;
}

NetworkResult estimate_on_modules(const Matrix& data, const Partition& modules, NetworkRule rule,
                                  const SelectionConfig& config, std::uint64_t seed)
{
    const int p = static_cast<int>(data.cols());
    NetworkResult out;
    out.modules = modules;
    out.estimate.precision = Matrix::Zero(p, p);
    const auto clusters = modules.clusters();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& block = clusters[c];
        if (block.size() == 1) {
            const int i = block.front();
            const Vector col = data.col(i);
            const double var = (col.array() - col.mean()).square().sum() / static_cast<double>(data.rows() - 1);
            out.estimate.precision(i, i) = 1.0 / var;
            out.module_lambdas.push_back(0.0);
            continue;
        }
        auto fit = fit_module(select_columns(data, block), rule, config,
                              derive_seed(seed, kModuleStream, static_cast<std::uint64_t>(c)));
        out.flagged = out.flagged || fit.flagged;
        out.module_lambdas.push_back(fit.lambda);
        for (std::size_t b = 0; b < block.size(); ++b) {
            for (std::size_t a = 0; a < block.size(); ++a) {
                out.estimate.precision(block[a], block[b]) =
                    fit.estimate.precision(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
        // Module adjacency is taken as reported (support-restricted rules may
        // keep edges whose precision entry is small).
        if (out.estimate.adjacency.size() == 0) out.estimate.adjacency = Adjacency::Zero(p, p);
        for (std::size_t b = 0; b < block.size(); ++b) {
            for (std::size_t a = 0; a < block.size(); ++a) {
                out.estimate.adjacency(block[a], block[b]) =
                    fit.estimate.adjacency(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
    }
    if (out.estimate.adjacency.size() == 0) out.estimate.adjacency = Adjacency::Zero(p, p);
    if (clusters.size() == 1) out.estimate.lambda = out.module_lambdas.front();
    return out;
}

} // namespace

NetworkResult one_step_estimate(const Matrix& data, NetworkRule rule, const SelectionConfig& config,
                                std::uint64_t seed)
{
    return estimate_on_modules(data, Partition::single_cluster(static_cast<int>(data.cols())), rule, config, seed);
}

NetworkResult two_step_estimate(const Matrix& data, Linkage link, const KRule& k_rule, NetworkRule rule,
                                const SelectionConfig& config, std::uint64_t seed)
{
    if (rule == NetworkRule::stability_selection) {
        throw InvalidArgument("stability selection is only available as a one-step method");
    }
    const auto clustering = cluster_variables(data, link, k_rule, config.agglomerate);
    return estimate_on_modules(data, clustering.partition, rule, config, seed);
}

} // namespace stabglasso
