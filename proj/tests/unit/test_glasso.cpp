#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <stabglasso/glasso.hpp>

#include "oracles.hpp"

using namespace stabglasso;

namespace {

// Largest violation of the stationarity conditions
//   W_ii = S_ii + lambda,  W_ij = S_ij + lambda sign(T_ij) if T_ij != 0,
//   |W_ij - S_ij| <= lambda otherwise,  with W = T^{-1}.
double kkt_residual(const Matrix& s, const GraphEstimate& est, double lambda)
{
    const Matrix w = est.precision.inverse();
    double worst = 0.0;
    for (Index i = 0; i < s.rows(); ++i) {
        for (Index j = 0; j < s.cols(); ++j) {
            const double g = w(i, j) - s(i, j);
            if (i == j) {
                worst = std::max(worst, std::abs(g - lambda));
            } else if (est.adjacency(i, j) != 0) {
                worst = std::max(worst, std::abs(g - lambda * (est.precision(i, j) > 0 ? 1.0 : -1.0)));
            } else {
                worst = std::max(worst, std::abs(g) - lambda);
            }
        }
    }
    return worst;
}

GlassoOptions tight()
{
    GlassoOptions o;
    o.tol = 1e-8;
    o.max_iter = 2000;
    return o;
}

} // namespace

TEST_CASE("identity covariance gives a scaled identity precision")
{
    const auto est = glasso_solve(Matrix::Identity(2, 2), 0.1);
    CHECK(est.precision(0, 0) == doctest::Approx(1 / 1.1));
    CHECK(est.precision(1, 1) == doctest::Approx(1 / 1.1));
    CHECK(est.precision(0, 1) == 0.0);
    CHECK(est.edge_count() == 0);
    CHECK(kkt_residual(Matrix::Identity(2, 2), est, 0.1) <= 1e-12);
}

TEST_CASE("zero penalty recovers the inverse covariance")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix s = oracle::random_correlation(6, 40, rng);
        const auto est = glasso_solve(s, 0.0, tight());
        CHECK((est.precision - s.inverse()).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("penalty at or above the largest correlation gives a diagonal estimate")
{
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 2 + trial % 9;
        const Matrix s = oracle::random_correlation(p, 30, rng);
        const double lam = max_abs_off_diagonal(s);
        const auto est = glasso_solve(s, lam);
        CHECK(est.edge_count() == 0);
        for (Index i = 0; i < p; ++i) {
            CHECK(est.precision(i, i) == doctest::Approx(1.0 / (s(i, i) + lam)));
        }
    }
}

TEST_CASE("solutions satisfy the optimality conditions")
{
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> frac(0.05, 0.9);
    for (int trial = 0; trial < 40; ++trial) {
        const int p = 3 + trial % 12;
        const Matrix s = oracle::random_correlation(p, 2 * p + 5, rng);
        const double lam = frac(rng) * max_abs_off_diagonal(s);
        const auto est = glasso_solve(s, lam, tight());
        CHECK(kkt_residual(s, est, lam) <= 1e-5);
        CHECK((est.precision - est.precision.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(est.lambda.value() == lam);
    }
}

TEST_CASE("log det of the working covariance never decreases across sweeps")
{
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 5 + trial % 10;
        const Matrix s = oracle::random_correlation(p, p + 3, rng, 1.5);
        GlassoOptions o = tight();
        o.record_objective = true;
        const auto fit = glasso_fit(s, 0.1 * max_abs_off_diagonal(s), o);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
            CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-10);
        }
    }
}

TEST_CASE("solver error paths")
{
    Matrix singular = Matrix::Ones(3, 3);
    CHECK_THROWS_AS(glasso_solve(singular, 0.0), InvalidArgument);
    CHECK_NOTHROW(glasso_solve(singular, 0.5));
    CHECK_THROWS_AS(glasso_solve(Matrix::Identity(2, 2), -0.1), InvalidArgument);

    std::mt19937_64 rng(59);
    const Matrix s = oracle::random_correlation(12, 14, rng, 2.0);
    GlassoOptions o;
    o.tol = 1e-12;
    o.max_iter = 1;
    try {
        glasso_solve(s, 0.01, o);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 1);
        CHECK(e.last_change() > 0.0);
    }
}

TEST_CASE("forbidden entries stay zero under a weighted penalty")
{
    std::mt19937_64 rng(61);
    const Matrix s = oracle::random_correlation(6, 30, rng, 1.5);
    Matrix pen = Matrix::Constant(6, 6, 0.05);
    pen(0, 1) = pen(1, 0) = std::numeric_limits<double>::infinity();
    const auto fit = glasso_fit_weighted(s, pen, tight());
    CHECK(fit.estimate.precision(0, 1) == 0.0);
    CHECK(fit.estimate.adjacency(0, 1) == 0);
}

TEST_CASE("screen_components examples")
{
    Matrix s = Matrix::Identity(3, 3);
    s(0, 1) = s(1, 0) = 0.5;
    s(1, 2) = s(2, 1) = 0.1;
    CHECK(screen_components(s, 0.3).partition == Partition({0, 0, 1}));
    CHECK(screen_components(s, 0.5).partition == Partition::singletons(3));
    s(0, 2) = s(2, 0) = 0.05;
    CHECK(screen_components(s, 0.0).partition == Partition::single_cluster(3));
}

TEST_CASE("two-step estimator matches the full solver and respects screening")
{
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> frac(0.1, 0.95);
    for (int trial = 0; trial < 40; ++trial) {
        const int p = 3 + trial % 13;
        const Matrix s = oracle::random_correlation(p, p + 10, rng, 0.8);
        const double lam = frac(rng) * max_abs_off_diagonal(s);
        const auto screened = screen_components(s, lam).partition;
        GlassoOptions o = tight();
        const auto two = glasso_two_step(s, lam, o);
        const auto full = glasso_solve(s, lam, o);
        CHECK((two.precision - full.precision).cwiseAbs().maxCoeff() <= 1e-4);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                if (screened[i] != screened[j]) {
                    CHECK(two.precision(i, j) == 0.0);
                    CHECK(full.adjacency(i, j) == 0);
                }
            }
        }
        // Components of the full solution refine the screened partition.
        UnionFind uf(p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < i; ++j)
                if (full.adjacency(i, j)) uf.unite(i, j);
        CHECK(uf.partition().refines(screened));
    }
}

TEST_CASE("singleton components use the scalar closed form")
{
    Matrix s = Matrix::Identity(3, 3);
    s(0, 1) = s(1, 0) = 0.6;
    s(2, 2) = 1.0;
    const auto est = glasso_two_step(s, 0.2);
    CHECK(est.precision(2, 2) == doctest::Approx(1.0 / 1.2));
    CHECK(est.precision(0, 2) == 0.0);
    CHECK(est.adjacency(0, 1) == 1);
}

TEST_CASE("lambda grid")
{
    Matrix s = Matrix::Identity(3, 3);
    s(0, 1) = s(1, 0) = 1.0 - 1e-9;
    s(0, 2) = s(2, 0) = 0.2;
    const auto g = lambda_grid(s, 3, 0.01);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.1));
    CHECK(g[2] == doctest::Approx(0.01));
    CHECK(lambda_grid(Matrix::Identity(4, 4), 10) == std::vector<double>{0.0});
    CHECK_THROWS_AS(lambda_grid(s, 3, 0.0), InvalidArgument);

    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix r = oracle::random_correlation(8, 20, rng);
        const auto grid = lambda_grid(r, 50);
        CHECK(grid.size() == 50);
        CHECK(std::is_sorted(grid.rbegin(), grid.rend()));
        CHECK(glasso_two_step(r, grid.front()).edge_count() == 0);
    }
}

TEST_CASE("gaussian log-likelihood")
{
    CHECK(gaussian_loglik(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2) == doctest::Approx(-2.0));
    CHECK(gaussian_loglik(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 2.0), 3) ==
          doctest::Approx(1.5 * (std::log(2.0) - 2.0)));
    CHECK(1.5 * (std::log(2.0) - 2.0) == doctest::Approx(-1.9603).epsilon(1e-4));

    std::mt19937_64 rng(73);
    const Matrix s = oracle::random_correlation(5, 20, rng);
    const Matrix t = s.inverse();
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    const Matrix sp = perm * s * perm.transpose();
    const Matrix tp = perm * t * perm.transpose();
    CHECK(gaussian_loglik(sp, tp, 20) == doctest::Approx(gaussian_loglik(s, t, 20)));

    Matrix not_pd = Matrix::Identity(2, 2);
    not_pd(0, 1) = not_pd(1, 0) = 2.0;
    CHECK_THROWS_AS(gaussian_loglik(Matrix::Identity(2, 2), not_pd, 5), InvalidArgument);
}
