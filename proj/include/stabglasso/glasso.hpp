#pragma once

#include <optional>
#include <vector>

#include <stabglasso/core.hpp>

namespace stabglasso {

using Adjacency = Eigen::MatrixXi;

/// Estimated precision matrix with its 0/1 edge pattern.
struct GraphEstimate
{
    Matrix precision;
    Adjacency adjacency;
    /// Penalty used for the whole matrix; empty when modules used different penalties.
    std::optional<double> lambda;

    int size() const noexcept { return static_cast<int>(adjacency.rows()); }
    /// Number of unordered pairs {i,j} with an edge.
    int edge_count() const;
    /// edge_count / (p(p-1)/2); zero when p < 2.
    double density() const;
};

/// Edge pattern of a precision matrix: |theta_ij| > 1e-8 * max_k theta_kk.
Adjacency adjacency_from_precision(const Matrix& precision);
inline constexpr double kEdgeRelativeThreshold = 1e-8;

struct GlassoOptions
{
    /// Sweep stops when the mean absolute change of the off-diagonal working
    /// covariance is at most tol * mean |off-diagonal S|.
    double tol = 1e-4;
    int max_iter = 100;
    /// Starting working covariance; its diagonal is reset to S_ii + lambda.
    const Matrix* warm_start = nullptr;
    /// Starting precision, used for the column regression coefficients.
    const Matrix* warm_precision = nullptr;
    /// Record log det of the working covariance after every sweep.
    bool record_objective = false;
};

struct GlassoFit
{
    GraphEstimate estimate;
    /// Working covariance W, the inverse of the unsymmetrized estimate.
    Matrix covariance;
    int sweeps = 0;
    double last_change = 0.0;
    std::vector<double> objective_trace;
};

/**
 * Graphical lasso: maximizes log det T - tr(S T) - lambda ||T||_1 by block
 * coordinate descent over columns with a coordinate-descent lasso inside.
 * The penalty covers the diagonal.
 *
 * Throws InvalidArgument for malformed S or lambda = 0 with singular S, and
 * ConvergenceError (carrying the last change) when max_iter sweeps are not enough.
 */
GraphEstimate glasso_solve(const Matrix& s, double lambda, const GlassoOptions& options = {});

/// glasso_solve returning solver diagnostics.
GlassoFit glasso_fit(const Matrix& s, double lambda, const GlassoOptions& options = {});

/**
 * Graphical lasso with an entrywise penalty matrix. Entries equal to
 * +infinity force the corresponding precision entry to zero.
 */
GlassoFit glasso_fit_weighted(const Matrix& s, const Matrix& penalty, const GlassoOptions& options = {});

/// Connected components of the graph with edges |S_ij| > lambda.
struct ComponentDecomposition
{
    Partition partition;
    double threshold = 0.0;
};

ComponentDecomposition screen_components(const Matrix& s, double lambda);

/**
 * Screens S at lambda and solves each component separately; singleton
 * components get 1/(S_ii + lambda). Off-block entries are exactly zero.
 */
GraphEstimate glasso_two_step(const Matrix& s, double lambda, const GlassoOptions& options = {});

/// Log-spaced descending grid from max_{i!=j}|S_ij| to ratio times that; {0} for diagonal S.
std::vector<double> lambda_grid(const Matrix& s, int n_points = 50, double ratio = 0.01);

/// (n/2)(log det Theta - tr(S Theta)); throws if Theta is not positive definite.
double gaussian_loglik(const Matrix& s, const Matrix& theta, double n);

} // namespace stabglasso
