#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <stabglasso/core.hpp>
#include <stabglasso/glasso.hpp>

namespace stabglasso {

/// Block-diagonal Gaussian model with a sparse per-block precision.
struct BlockModel
{
    int p = 0;
    std::vector<int> block_sizes;
    double within_density = 0.0;
    std::uint64_t seed = 0;
    /// Unit-diagonal covariance, exactly zero across blocks.
    Matrix sigma;
    /// Nonzero pattern of the generating precision.
    Adjacency truth;
    Partition blocks;
};

/// Observations (rows) by variables (columns), with optional ground truth.
struct Dataset
{
    Matrix data;
    std::vector<std::string> labels;
    std::optional<Adjacency> true_adjacency;
    std::optional<Partition> true_partition;

    int n() const noexcept { return static_cast<int>(data.rows()); }
    int p() const noexcept { return static_cast<int>(data.cols()); }
};

inline constexpr double kDefaultWithinDensity = 0.45;

/// How the diagonal of each block precision is set before inversion.
enum class PrecisionDiagonal
{
    /// Shift so the smallest eigenvalue equals kSpectralFloor.
    spectral_shift,
    /// 1 + sum of absolute off-diagonal weights in the row.
    dominance,
};

inline constexpr double kSpectralFloor = 0.1;

std::string_view to_string(PrecisionDiagonal d);
PrecisionDiagonal parse_precision_diagonal(std::string_view text);

/**
 * Splits p into K blocks as evenly as possible (larger blocks first). Each
 * block gets a precision with Bernoulli(within_density) edges of weight
 * +-U[0.3, 0.7] and a diagonal set per `diagonal`; its inverse is rescaled
 * to unit diagonal.
 */
BlockModel generate_block_model(int p, int k, double within_density = kDefaultWithinDensity,
                                std::uint64_t seed = 0,
                                PrecisionDiagonal diagonal = PrecisionDiagonal::spectral_shift);

/// n draws of N(0, sigma) via the Cholesky factor; deterministic per seed.
Dataset sample_mvn(const Matrix& sigma, int n, std::uint64_t seed);

/// Centers each column and scales to unit sample variance (divisor n - 1).
Matrix standardize(const Matrix& data, const std::vector<std::string>& labels = {});
Dataset standardize(const Dataset& d);

/// Correlation matrix of the columns, exactly symmetric with unit diagonal.
Matrix sample_correlation(const Matrix& data);

/// Rows `rows` of data, in the given order.
Matrix select_rows(const Matrix& data, const std::vector<int>& rows);

/// V fresh standardized samples of size batch_size from the model (simulated case).
std::vector<Dataset> make_batches(const BlockModel& model, int batch_size, int v, std::uint64_t seed);

/// Row indices of each split-rows batch: a seeded shuffle cut into V consecutive runs.
std::vector<std::vector<int>> batch_row_indices(int n, int batch_size, int v, std::uint64_t seed);

/**
 * Seeded row shuffle, then V disjoint consecutive batches of batch_size rows,
 * each re-standardized (real-data case). The shuffle does not depend on V,
 * so smaller V yields a prefix of the batches of larger V.
 */
std::vector<Dataset> make_batches(const Dataset& data, int batch_size, int v, std::uint64_t seed);

} // namespace stabglasso
