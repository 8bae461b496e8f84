#include <stabglasso/simgen.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace stabglasso {

namespace {

// Independent seed streams so each stage is reproducible on its own.
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

std::string column_name(const std::vector<std::string>& labels, Index j)
{
    if (static_cast<std::size_t>(j) < labels.size() && !labels[static_cast<std::size_t>(j)].empty()) {
        return "'" + labels[static_cast<std::size_t>(j)] + "' (column " + std::to_string(j) + ")";
    }
    return "column " + std::to_string(j);
}

} // namespace

std::string_view to_string(PrecisionDiagonal d)
{
    return d == PrecisionDiagonal::spectral_shift ? "shift" : "dominance";
}

PrecisionDiagonal parse_precision_diagonal(std::string_view text)
{
    if (text == "shift" || text == "spectral_shift") return PrecisionDiagonal::spectral_shift;
    if (text == "dominance") return PrecisionDiagonal::dominance;
    throw InvalidArgument("unknown precision diagonal rule '" + std::string(text) + "' (expected shift or dominance)");
}

BlockModel generate_block_model(int p, int k, double within_density, std::uint64_t seed, PrecisionDiagonal diagonal)
{
    if (k < 1 || k > p) {
        throw InvalidArgument("block count K=" + std::to_string(k) + " must lie in [1, p=" + std::to_string(p) + "]");
    }
    if (!(within_density > 0.0 && within_density <= 1.0)) {
        throw InvalidArgument("within-block density must lie in (0, 1]");
    }

    BlockModel model;
    model.p = p;
    model.within_density = within_density;
    model.seed = seed;
    model.sigma = Matrix::Zero(p, p);
    model.truth = Adjacency::Zero(p, p);

    const int base = p / k;
    const int extra = p % k;
    std::vector<int> labels(static_cast<std::size_t>(p));
    for (int b = 0; b < k; ++b) {
        model.block_sizes.push_back(base + (b < extra ? 1 : 0));
    }

    std::mt19937_64 rng(derive_seed(seed, kModelStream, 0));
    std::bernoulli_distribution edge(within_density);
    std::uniform_real_distribution<double> magnitude(0.3, 0.7);
    std::bernoulli_distribution positive(0.5);

    int offset = 0;
    for (int b = 0; b < k; ++b) {
        const int m = model.block_sizes[static_cast<std::size_t>(b)];
        Matrix omega = Matrix::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < j; ++i) {
                if (edge(rng)) {
                    const double w = magnitude(rng) * (positive(rng) ? 1.0 : -1.0);
                    omega(i, j) = w;
                    omega(j, i) = w;
                    model.truth(offset + i, offset + j) = 1;
                    model.truth(offset + j, offset + i) = 1;
                }
            }
        }
        if (diagonal == PrecisionDiagonal::dominance) {
            for (int i = 0; i < m; ++i) {
                omega(i, i) = 1.0 + omega.row(i).cwiseAbs().sum();
            }
        } else {
            const double lowest = Eigen::SelfAdjointEigenSolver<Matrix>(omega, Eigen::EigenvaluesOnly).eigenvalues()(0);
            omega.diagonal().array() += kSpectralFloor - lowest;
        }
        const Matrix cov = omega.inverse();
        const Vector scale = cov.diagonal().cwiseSqrt().cwiseInverse();
        Matrix corr = scale.asDiagonal() * cov * scale.asDiagonal();
        corr = (0.5 * (corr + corr.transpose())).eval();
        corr.diagonal().setOnes();
        model.sigma.block(offset, offset, m, m) = corr;
        for (int i = 0; i < m; ++i) {
            labels[static_cast<std::size_t>(offset + i)] = b;
        }
        offset += m;
    }
    model.blocks = Partition(std::move(labels));
    return model;
}

Dataset sample_mvn(const Matrix& sigma, int n, std::uint64_t seed)
{
    if (n < 1) {
        throw InvalidArgument("sample size must be positive");
    }
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        throw InvalidArgument("covariance must be square and nonempty");
    }
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw InvalidArgument("covariance is not positive definite");
    }
    const Index p = sigma.rows();
    std::mt19937_64 rng(derive_seed(seed, kSampleStream, 0));
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix draws(n, p);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < p; ++c) {
            draws(r, c) = z(rng);
        }
    }
    Dataset out;
    out.data = draws * llt.matrixL().transpose();
    return out;
}

Matrix standardize(const Matrix& data, const std::vector<std::string>& labels)
{
    const Index n = data.rows();
    if (n < 2) {
        throw InvalidArgument("standardization needs at least two observations, got " + std::to_string(n));
    }
    Matrix out = data.rowwise() - data.colwise().mean();
    for (Index j = 0; j < out.cols(); ++j) {
        const double sd = std::sqrt(out.col(j).squaredNorm() / static_cast<double>(n - 1));
        const double scale = std::max(1.0, data.col(j).cwiseAbs().maxCoeff());
        if (!(sd > 1e-12 * scale)) {
            throw InvalidArgument("constant " + column_name(labels, j) + " cannot be standardized");
        }
        out.col(j) /= sd;
    }
    return out;
}

Dataset standardize(const Dataset& d)
{
    Dataset out = d;
    out.data = standardize(d.data, d.labels);
    return out;
}

Matrix sample_correlation(const Matrix& data)
{
    const Matrix z = standardize(data);
    Matrix r = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
    r = (0.5 * (r + r.transpose())).eval();
    r.diagonal().setOnes();
    return r;
}

Matrix select_rows(const Matrix& data, const std::vector<int>& rows)
{
    Matrix out(static_cast<Index>(rows.size()), data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = data.row(rows[i]);
    }
    return out;
}

std::vector<Dataset> make_batches(const BlockModel& model, int batch_size, int v, std::uint64_t seed)
{
    if (v < 1 || batch_size < 2) {
        throw InvalidArgument("batching needs V >= 1 and batch size >= 2");
    }
    std::vector<Dataset> batches;
    batches.reserve(static_cast<std::size_t>(v));
    for (int b = 0; b < v; ++b) {
        Dataset d = sample_mvn(model.sigma, batch_size, derive_seed(seed, kSampleStream, static_cast<std::uint64_t>(b)));
        d.data = standardize(d.data);
        d.true_adjacency = model.truth;
        d.true_partition = model.blocks;
        batches.push_back(std::move(d));
    }
    return batches;
}

std::vector<std::vector<int>> batch_row_indices(int n, int batch_size, int v, std::uint64_t seed)
{
    if (v < 1 || batch_size < 2) {
        throw InvalidArgument("batching needs V >= 1 and batch size >= 2");
    }
    const long needed = static_cast<long>(v) * batch_size;
    if (n < needed) {
        throw InvalidArgument("split-rows batching needs " + std::to_string(needed) + " rows (V=" +
                              std::to_string(v) + " x " + std::to_string(batch_size) + "), dataset has " +
                              std::to_string(n));
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, kShuffleStream, 0));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<int>> batches;
    for (int b = 0; b < v; ++b) {
        const auto first = order.begin() + static_cast<std::ptrdiff_t>(b) * batch_size;
        batches.emplace_back(first, first + batch_size);
    }
    return batches;
}

std::vector<Dataset> make_batches(const Dataset& data, int batch_size, int v, std::uint64_t seed)
{
    std::vector<Dataset> batches;
    for (const auto& rows : batch_row_indices(data.n(), batch_size, v, seed)) {
        Dataset d;
        d.labels = data.labels;
        d.true_adjacency = data.true_adjacency;
        d.true_partition = data.true_partition;
        d.data = standardize(select_rows(data.data, rows), data.labels);
        batches.push_back(std::move(d));
    }
    return batches;
}

} // namespace stabglasso
