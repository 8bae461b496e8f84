#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <stabglasso/harness.hpp>
#include <stabglasso/simgen.hpp>

namespace stabglasso {

inline constexpr const char* kVersion = "0.1.0";

/// Flat experiment description. Every field has a same-named JSON key and command flag.
struct ExperimentConfig
{
    /// "simulate" draws R block models; "real" splits the rows of input_path.
    std::string mode = "simulate";
    int p = 100;
    /// Batch size.
    int n = 70;
    int V = 17;
    int K = 15;
    int R = 5;
    double within_density = kDefaultWithinDensity;
    std::string precision_diagonal = "shift";

    std::vector<std::string> linkages{"SL", "AL", "CL", "WL", "ML"};
    /// SH, BIC, a positive integer, or K / 2K (simulate mode only).
    std::vector<std::string> k_rules{"K", "2K", "2", "SH", "BIC"};
    /// One-step penalty rules.
    std::vector<std::string> lambda_rules{"BIC", "EBIC", "STARS", "ESCV", "BL", "SS"};
    /// LINK-KRULE_RULE, e.g. SL-SH_BIC or AL-2_sparse.
    std::vector<std::string> two_step_methods{"SL-SH_BIC", "SL-SH_EBIC", "SL-SH_STARS",
                                              "SL-SH_ESCV", "SL-SH_BL",   "AL-2_sparse"};

    double tol = 1e-4;
    int max_iter = 100;
    int grid_size = 50;
    double grid_ratio = 0.01;
    double ebic_gamma = 0.5;
    double stars_beta = 0.05;
    int stars_subsamples = 20;
    int escv_folds = 5;
    int bolasso_resamples = 100;
    double bolasso_threshold = 0.9;
    int bolasso_cv_folds = 5;
    int ss_subsamples = 100;
    double ss_pi = 0.8;
    /// "D2" or "D".
    std::string ward = "D2";

    std::uint64_t seed = 1;
    /// Worker threads for the batches; 0 uses every hardware thread.
    int threads = 0;
    std::string input_path;
    bool has_header = false;
    std::string output_dir = "results";
};

/// Parses a JSON object of config keys over the defaults. Unknown keys and
/// wrongly typed values are errors naming the key.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

/// Defaults, then the JSON file at `path` (if any), then the textual overrides
/// (lists comma-separated). Validates the result.
ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

/// All config keys, in declaration order.
std::vector<std::string> config_keys();

/// Throws InvalidArgument naming the first offending key.
void validate(const ExperimentConfig& config);

SelectionConfig selection_config(const ExperimentConfig& config);

/// Two-step method spec "LINK-KRULE_RULE"; K-relative rules resolved with `k_true` (0 = unknown).
Pipeline parse_two_step_method(const std::string& spec, const SelectionConfig& config, int k_true = 0);

/**
 * Numeric CSV, rows = observations. Errors cite 1-based (line, column)
 * coordinates: ragged rows, non-numeric cells, empty files.
 */
Dataset ingest_csv(const std::string& path, bool has_header);

/// One table cell group; empty mean/sd print as NA.
struct ReportRow
{
    std::string method;
    std::string metric;
    std::optional<double> mean;
    std::optional<double> sd;
    int runs = 0;
    std::uint64_t seed = 0;
};

struct TableResult
{
    std::string name;
    std::vector<ReportRow> rows;
    /// Elapsed seconds per method, over all models and batches.
    std::map<std::string, double> wall_seconds;
    std::map<std::string, int> flagged_batches;
    /// Method and message of every failed method.
    std::vector<std::pair<std::string, std::string>> failures;
};

/// The V batches of every model: R replicate models (simulate) or one split of the input rows (real).
struct BatchSet
{
    std::vector<std::vector<Dataset>> models;
    std::vector<std::uint64_t> model_seeds;
    /// Known number of blocks, 0 for real data.
    int k_true = 0;
};

BatchSet build_batches(const ExperimentConfig& config);

/// Normalized cophenetic distance per linkage.
TableResult run_table1(const ExperimentConfig& config, const BatchSet& batches);
/// Pairwise ARI per (linkage, k rule), then the mean selected k per (linkage, SH / BIC).
std::pair<TableResult, TableResult> run_table2_3(const ExperimentConfig& config, const BatchSet& batches);
/// Density, Hamming and (with truth) precision, recall, specificity, FDR for every network method.
TableResult run_table4_5(const ExperimentConfig& config, const BatchSet& batches);

/// Header method,metric,mean,sd,runs,seed with RFC 4180 quoting and LF line endings.
std::string to_csv(const std::vector<ReportRow>& rows);

/// Writes <dir>/<name>.csv and <dir>/<name>.metadata.json; returns the CSV path.
std::string write_table(const TableResult& table, const ExperimentConfig& config, const std::string& command);

/// Writes the first model's concatenated V batches as CSV plus its true adjacency and blocks.
std::vector<std::string> write_simulated_data(const ExperimentConfig& config);

} // namespace stabglasso
