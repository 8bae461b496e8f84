#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <stabglasso/core.hpp>
#include <stabglasso/dendro.hpp>
#include <stabglasso/glasso.hpp>
#include <stabglasso/hclust.hpp>

namespace stabglasso {

// ---------------------------------------------------------------------------
// Cluster-count selection on a dendrogram

/// Gaussian log-likelihood of a block-diagonal covariance built from the
/// per-block sample covariances of standardized data.
struct ClusterLoglik
{
    double loglik = 0.0;
    /// Free covariance parameters, sum over blocks of m (m + 1) / 2.
    int dim = 0;
    /// False when some block has at least n variables or a singular covariance.
    bool feasible = true;
};

ClusterLoglik cluster_loglik(const Matrix& data, const Partition& partition);

struct ClusterModelScore
{
    int k = 0;
    Partition partition;
    double loglik = 0.0;
    int dim = 0;
    double criterion_value = 0.0;
    bool feasible = true;
};

struct ClusterSelection
{
    Partition partition;
    int k = 0;
    /// One entry per cut, k = p down to 1.
    std::vector<ClusterModelScore> scores;
    /// Slope-heuristic penalty per dimension (NaN for BIC).
    double kappa = 0.0;
    /// The slope heuristic could not be fitted and BIC was used instead.
    bool fell_back_to_bic = false;
};

/// Log-likelihood and dimension of every cut of t, computed incrementally along the merges.
std::vector<ClusterModelScore> score_cuts(const Matrix& data, const Dendrogram& t);

/// argmin of -2 loglik + dim log n over feasible cuts; ties go to the larger k.
ClusterSelection select_k_bic(const Matrix& data, const Dendrogram& t);

/**
 * Least-squares slope of -loglik against dim over the feasible cuts whose
 * dimension lies in the upper half of the feasible range. The penalty per
 * dimension is twice the negated slope; falls back to BIC (flagged) with
 * fewer than 4 feasible cuts or a nonnegative slope.
 */
ClusterSelection select_k_slope_heuristic(const Matrix& data, const Dendrogram& t);

/// The two rules applied to precomputed scores (n = sample size).
ClusterSelection apply_bic(std::vector<ClusterModelScore> scores, int n);
ClusterSelection apply_slope_heuristic(std::vector<ClusterModelScore> scores, int n);

/// Ordinary least-squares slope of y against x over points with x >= (min x + max x) / 2.
double upper_half_slope(const std::vector<double>& x, const std::vector<double>& y);

enum class KRuleKind { slope_heuristic, bic, fixed };

struct KRule
{
    KRuleKind kind = KRuleKind::slope_heuristic;
    int k = 0;

    static KRule slope_heuristic() { return {KRuleKind::slope_heuristic, 0}; }
    static KRule bic() { return {KRuleKind::bic, 0}; }
    static KRule fixed(int k) { return {KRuleKind::fixed, k}; }
};

/// "SH", "BIC" or the decimal k.
std::string to_string(const KRule& rule);
/// Accepts "SH", "BIC" and positive integers.
KRule parse_k_rule(std::string_view text);

/// Clusters variables on 1 - |correlation| and cuts the dendrogram per rule.
ClusterSelection cluster_variables(const Matrix& data, Linkage link, const KRule& rule,
                                   const AgglomerateOptions& options = {});

// ---------------------------------------------------------------------------
// Penalty selection for the graphical lasso

struct SolverConfig
{
    GlassoOptions glasso;
    /// Screen into connected components first; otherwise solve the full
    /// problem with warm starts along the grid.
    bool two_step = true;
};

struct GridConfig
{
    int size = 50;
    double ratio = 0.01;
};

struct StarsParams
{
    double beta = 0.05;
    int subsamples = 20;
    /// 0 selects min(floor(10 sqrt(n)), n - 1).
    int subsample_size = 0;
};

struct EscvParams
{
    int folds = 5;
};

struct BolassoParams
{
    int resamples = 100;
    double freq_threshold = 0.9;
    int cv_folds = 5;
};

struct StabilitySelectionParams
{
    int subsamples = 100;
    double pi_threshold = 0.8;
    /// Target edge count per subsample; 0 selects sqrt(0.8 p).
    double q_target = 0.0;
};

struct SelectionConfig
{
    SolverConfig solver;
    GridConfig grid;
    double ebic_gamma = 0.5;
    StarsParams stars;
    EscvParams escv;
    BolassoParams bolasso;
    StabilitySelectionParams stability_selection;
    AgglomerateOptions agglomerate;
};

struct LambdaScore
{
    double lambda = 0.0;
    double loglik = 0.0;
    int edge_count = 0;
    double criterion_value = 0.0;
};

struct LambdaSelection
{
    LambdaScore chosen;
    GraphEstimate estimate;
    /// Scores of the grid points that were evaluated, in decreasing lambda.
    std::vector<LambdaScore> path;
    /// Selection hit a fallback (bound never met, empty result, all scores infinite).
    bool flagged = false;
};

/// Grid solutions in decreasing lambda; failed points are empty.
std::vector<std::optional<GraphEstimate>> solve_path(const Matrix& s, const std::vector<double>& grid,
                                                     const SolverConfig& solver);

/**
 * argmin over the grid of -2 loglik + E log n + 4 gamma E log p, E the edge
 * count; gamma = 0 is BIC. Ties go to the larger lambda, failed points are skipped.
 */
LambdaSelection select_lambda_ic(const Matrix& s, int n, const std::vector<double>& grid, double gamma,
                                 const SolverConfig& solver = {});

/**
 * StARS: edge frequencies over N subsamples of size b, instability
 * D = mean 2 theta (1 - theta), made monotone from the sparse end. Picks the
 * least regularized lambda whose monotone instability stays at or below beta.
 */
LambdaSelection select_lambda_stars(const Matrix& data, const std::vector<double>& grid, const StarsParams& params,
                                    std::uint64_t seed, const SolverConfig& solver = {});

/// Penalty minimizing the held-out negative log-likelihood over `folds` folds; ties go to the larger lambda.
double cross_validated_lambda(const Matrix& data, const std::vector<double>& grid, int folds, std::uint64_t seed,
                              const SolverConfig& solver = {});

/**
 * ESCV: estimation stability of fold-complement precisions, minimized over
 * lambda >= lambda_CV. ES is infinite where the mean off-diagonal vector is zero.
 */
LambdaSelection select_lambda_escv(const Matrix& data, const std::vector<double>& grid, const EscvParams& params,
                                   std::uint64_t seed, const SolverConfig& solver = {});

struct EdgeSelection
{
    GraphEstimate estimate;
    double lambda = 0.0;
    /// Selection frequency of every pair over the resamples.
    Matrix frequencies;
    int resamples_used = 0;
    bool empty = false;
};

/// Bootstrap at the cross-validated penalty, keeping edges selected in at least freq_threshold of resamples.
EdgeSelection select_edges_bolasso(const Matrix& data, const std::vector<double>& grid, const BolassoParams& params,
                                   std::uint64_t seed, const SolverConfig& solver = {});

/// Rounded sqrt(0.8 p), the default per-subsample edge target of stability selection.
int default_edge_target(int p);

/// Half-size subsamples, each at the largest grid lambda reaching q_target edges; keeps edges with frequency >= pi.
EdgeSelection select_edges_stability_selection(const Matrix& data, const std::vector<double>& grid,
                                               const StabilitySelectionParams& params, std::uint64_t seed,
                                               const SolverConfig& solver = {});

/// Largest grid lambda whose screened graph on s is connected (smallest grid value if none is).
double sparsest_connected_lambda(const Matrix& s, const std::vector<double>& grid);

// ---------------------------------------------------------------------------
// Composed estimators

enum class NetworkRule { bic, ebic, stars, escv, bolasso, stability_selection, sparse_max };

std::string_view to_string(NetworkRule rule);
/// Accepts BIC, EBIC, STARS, ESCV, BL/BoLasso, SS, sparse (case-insensitive).
NetworkRule parse_network_rule(std::string_view text);

struct NetworkResult
{
    GraphEstimate estimate;
    Partition modules;
    /// Penalty chosen in each module (cluster order); 0 for singleton modules.
    std::vector<double> module_lambdas;
    bool flagged = false;
};

/// Penalty selection and fit on the whole variable set.
NetworkResult one_step_estimate(const Matrix& data, NetworkRule rule, const SelectionConfig& config,
                                std::uint64_t seed);

/**
 * Clusters the variables, then selects a penalty and fits each module on its
 * own. Singleton modules get precision 1 / S_ii. Stability selection is not
 * offered here.
 */
NetworkResult two_step_estimate(const Matrix& data, Linkage link, const KRule& k_rule, NetworkRule rule,
                                const SelectionConfig& config, std::uint64_t seed);

} // namespace stabglasso
