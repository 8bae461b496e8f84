#include <stabglasso/glasso.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace stabglasso {

namespace {

constexpr int kMaxInnerPasses = 10000;

double soft_threshold(double x, double t)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

void check_covariance(const Matrix& s)
{
    if (s.rows() != s.cols() || s.rows() == 0) {
        throw InvalidArgument("covariance matrix must be square and nonempty");
    }
    const Index p = s.rows();
    for (Index j = 0; j < p; ++j) {
        if (!(s(j, j) > 0.0) || !std::isfinite(s(j, j))) {
            throw InvalidArgument("covariance diagonal must be positive (entry " + std::to_string(j) + ")");
        }
        for (Index i = 0; i < j; ++i) {
            const double tol = 1e-10 * std::max(1.0, std::abs(s(i, j)));
            if (!std::isfinite(s(i, j)) || std::abs(s(i, j) - s(j, i)) > tol) {
                throw InvalidArgument("covariance matrix is not symmetric at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
            }
        }
    }
}

bool is_singular(const Matrix& s)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return ev.minCoeff() <= 1e-10 * std::max(1.0, ev.maxCoeff());
}

double log_det_pd(const Matrix& m)
{
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        return -std::numeric_limits<double>::infinity();
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Lasso step for column j: minimize 1/2 b'W11 b - s12'b + sum pen_k |b_k|.
// `wb` must hold W * beta on entry and holds it on exit.
void column_lasso(const Matrix& w, const Matrix& s, const Matrix& pen, Index j, double inner_tol,
                  Eigen::Ref<Vector> beta, Vector& wb)
{
    const Index p = w.rows();
    auto update = [&](Index k) {
        const double old = beta(k);
        const double wkk = w(k, k);
        const double r = s(k, j) - (wb(k) - wkk * old);
        const double nb = std::isinf(pen(k, j)) ? 0.0 : soft_threshold(r, pen(k, j)) / wkk;
        if (nb != old) {
            wb.noalias() += w.col(k) * (nb - old);
            beta(k) = nb;
        }
        return std::abs(nb - old) * wkk;
    };

    std::vector<Index> active;
    for (int pass = 0; pass < kMaxInnerPasses; ++pass) {
        double dmax = 0.0;
        active.clear();
        for (Index k = 0; k < p; ++k) {
            if (k == j) continue;
            dmax = std::max(dmax, update(k));
            if (beta(k) != 0.0) active.push_back(k);
        }
        if (dmax <= inner_tol) {
            return;
        }
        // Iterate on the active set until it settles, then re-check everything.
        for (int inner = 0; inner < kMaxInnerPasses; ++inner) {
            double amax = 0.0;
            for (Index k : active) {
                amax = std::max(amax, update(k));
            }
            if (amax <= inner_tol) break;
        }
    }
}

} // namespace

int GraphEstimate::edge_count() const
{
    int count = 0;
    for (Index j = 0; j < adjacency.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            count += adjacency(i, j) != 0 ? 1 : 0;
        }
    }
    return count;
}

double GraphEstimate::density() const
{
    const double p = adjacency.rows();
    return p < 2 ? 0.0 : edge_count() / (p * (p - 1) / 2.0);
}

Adjacency adjacency_from_precision(const Matrix& precision)
{
    const Index p = precision.rows();
    Adjacency adj = Adjacency::Zero(p, p);
    if (p == 0) {
        return adj;
    }
    const double cut = kEdgeRelativeThreshold * precision.diagonal().maxCoeff();
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < j; ++i) {
            if (std::abs(precision(i, j)) > cut) {
                adj(i, j) = 1;
                adj(j, i) = 1;
            }
        }
    }
    return adj;
}

GlassoFit glasso_fit_weighted(const Matrix& s, const Matrix& pen, const GlassoOptions& options)
{
    check_covariance(s);
    const Index p = s.rows();
    if (pen.rows() != p || pen.cols() != p) {
        throw InvalidArgument("penalty matrix shape does not match covariance");
    }
    if ((pen.array() < 0.0).any() || !pen.diagonal().allFinite()) {
        throw InvalidArgument("penalties must be nonnegative with a finite diagonal");
    }
    if (!(options.tol > 0.0) || options.max_iter < 1) {
        throw InvalidArgument("solver needs tol > 0 and max_iter >= 1");
    }
    if (pen.diagonal().minCoeff() == 0.0 && is_singular(s)) {
        bool penalized = false;
        for (Index j = 0; j < p && !penalized; ++j) {
            for (Index i = 0; i < p; ++i) {
                if (i != j && pen(i, j) > 0.0) {
                    penalized = true;
                    break;
                }
            }
        }
        if (!penalized) {
            throw InvalidArgument("unpenalized fit needs a nonsingular covariance matrix");
        }
    }

    GlassoFit fit;
    Matrix& w = fit.covariance;
    if (options.warm_start != nullptr && options.warm_start->rows() == p && options.warm_start->cols() == p) {
        w = *options.warm_start;
    } else {
        w = s;
    }
    w.diagonal() = s.diagonal() + pen.diagonal();

    const double mean_abs_off =
        p > 1 ? (s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum()) / static_cast<double>(p * (p - 1)) : 0.0;

    Matrix beta = Matrix::Zero(p, p);
    if (const Matrix* t = options.warm_precision; t != nullptr && t->rows() == p && t->cols() == p) {
        for (Index j = 0; j < p; ++j) {
            for (Index k = 0; k < p; ++k) {
                if (k != j && !std::isinf(pen(k, j))) beta(k, j) = -(*t)(k, j) / (*t)(j, j);
            }
        }
    }
    if (mean_abs_off > 0.0) {
        const double threshold = options.tol * mean_abs_off;
        const double inner_tol = 1e-2 * threshold;
        Vector wb(p);
        bool converged = false;
        Matrix w_old;
        for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
            w_old = w;
            for (Index j = 0; j < p; ++j) {
                auto b = beta.col(j);
                wb.setZero();
                for (Index k = 0; k < p; ++k) {
                    if (b(k) != 0.0) wb.noalias() += w.col(k) * b(k);
                }
                column_lasso(w, s, pen, j, inner_tol, b, wb);
                for (Index k = 0; k < p; ++k) {
                    if (k == j) continue;
                    w(k, j) = wb(k);
                    w(j, k) = wb(k);
                }
            }
            fit.sweeps = sweep;
            fit.last_change = (w - w_old).cwiseAbs().sum() / static_cast<double>(p * (p - 1));
            if (options.record_objective) {
                fit.objective_trace.push_back(log_det_pd(w));
            }
            if (fit.last_change <= threshold) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw ConvergenceError("graphical lasso did not converge in " + std::to_string(options.max_iter) +
                                       " sweeps (last mean change " + std::to_string(fit.last_change) + ")",
                                   fit.last_change, fit.sweeps);
        }
    } else {
        beta.setZero();
        w = Matrix(w.diagonal().asDiagonal());
    }

    Matrix theta = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
        double quad = 0.0;
        for (Index k = 0; k < p; ++k) {
            if (k != j) quad += w(k, j) * beta(k, j);
        }
        const double tjj = 1.0 / (w(j, j) - quad);
        theta(j, j) = tjj;
        for (Index k = 0; k < p; ++k) {
            if (k != j) theta(k, j) = -beta(k, j) * tjj;
        }
    }
    theta = (0.5 * (theta + theta.transpose())).eval();

    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) {
        throw ConvergenceError("graphical lasso estimate is not positive definite", fit.last_change, fit.sweeps);
    }

    fit.estimate.adjacency = adjacency_from_precision(theta);
    fit.estimate.precision = std::move(theta);
    return fit;
}

GlassoFit glasso_fit(const Matrix& s, double lambda, const GlassoOptions& options)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be a finite nonnegative number");
    }
    auto fit = glasso_fit_weighted(s, Matrix::Constant(s.rows(), s.cols(), lambda), options);
    fit.estimate.lambda = lambda;
    return fit;
}

GraphEstimate glasso_solve(const Matrix& s, double lambda, const GlassoOptions& options)
{
    return glasso_fit(s, lambda, options).estimate;
}

ComponentDecomposition screen_components(const Matrix& s, double lambda)
{
    const Index p = s.rows();
    UnionFind uf(static_cast<int>(p));
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < j; ++i) {
            if (std::abs(s(i, j)) > lambda) {
                uf.unite(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    return {uf.partition(), lambda};
}

GraphEstimate glasso_two_step(const Matrix& s, double lambda, const GlassoOptions& options)
{
    check_covariance(s);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be a finite nonnegative number");
    }
    const Index p = s.rows();
    const auto decomposition = screen_components(s, lambda);

    GraphEstimate out;
    out.precision = Matrix::Zero(p, p);
    out.lambda = lambda;
    for (const auto& block : decomposition.partition.clusters()) {
        if (block.size() == 1) {
            const int i = block.front();
            out.precision(i, i) = 1.0 / (s(i, i) + lambda);
            continue;
        }
        const Matrix sub = submatrix(s, block);
        GlassoOptions block_options = options;
        Matrix warm_w;
        Matrix warm_t;
        block_options.warm_start = nullptr;
        block_options.warm_precision = nullptr;
        if (options.warm_start != nullptr && options.warm_start->rows() == p) {
            warm_w = submatrix(*options.warm_start, block);
            block_options.warm_start = &warm_w;
        }
        if (options.warm_precision != nullptr && options.warm_precision->rows() == p) {
            warm_t = submatrix(*options.warm_precision, block);
            block_options.warm_precision = &warm_t;
        }
        const Matrix theta = glasso_fit(sub, lambda, block_options).estimate.precision;
        for (std::size_t b = 0; b < block.size(); ++b) {
            for (std::size_t a = 0; a < block.size(); ++a) {
                out.precision(block[a], block[b]) = theta(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
    }
    out.adjacency = adjacency_from_precision(out.precision);
    return out;
}

std::vector<double> lambda_grid(const Matrix& s, int n_points, double ratio)
{
    if (n_points < 1) {
        throw InvalidArgument("lambda grid needs at least one point");
    }
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidArgument("lambda grid ratio must lie in (0, 1]");
    }
    const double top = max_abs_off_diagonal(s);
    if (top == 0.0) {
        return {0.0};
    }
    if (n_points == 1) {
        return {top};
    }
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double step = std::log(ratio) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        grid[static_cast<std::size_t>(i)] = top * std::exp(step * i);
    }
    grid.front() = top;
    grid.back() = top * ratio;
    return grid;
}

double gaussian_loglik(const Matrix& s, const Matrix& theta, double n)
{
    if (s.rows() != theta.rows() || s.cols() != theta.cols()) {
        throw InvalidArgument("covariance and precision shapes differ");
    }
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("precision matrix is not positive definite");
    }
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double trace = s.cwiseProduct(theta).sum();
    return 0.5 * n * (log_det - trace);
}

} // namespace stabglasso
