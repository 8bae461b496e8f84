#include <stabglasso/experiments.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace stabglasso {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kModelStream = 31;
constexpr std::uint64_t kBatchSplitStream = 32;
constexpr std::uint64_t kHarnessStream = 33;

// Calls f(key, field) for every config field, in declaration order.
template <class Config, class F>
void visit_fields(Config& c, F&& f)
{
    f("mode", c.mode);
    f("p", c.p);
    f("n", c.n);
    f("V", c.V);
    f("K", c.K);
    f("R", c.R);
    f("within_density", c.within_density);
    f("precision_diagonal", c.precision_diagonal);
    f("linkages", c.linkages);
    f("k_rules", c.k_rules);
    f("lambda_rules", c.lambda_rules);
    f("two_step_methods", c.two_step_methods);
    f("tol", c.tol);
    f("max_iter", c.max_iter);
    f("grid_size", c.grid_size);
    f("grid_ratio", c.grid_ratio);
    f("ebic_gamma", c.ebic_gamma);
    f("stars_beta", c.stars_beta);
    f("stars_subsamples", c.stars_subsamples);
    f("escv_folds", c.escv_folds);
    f("bolasso_resamples", c.bolasso_resamples);
    f("bolasso_threshold", c.bolasso_threshold);
    f("bolasso_cv_folds", c.bolasso_cv_folds);
    f("ss_subsamples", c.ss_subsamples);
    f("ss_pi", c.ss_pi);
    f("ward", c.ward);
    f("seed", c.seed);
    f("threads", c.threads);
    f("input_path", c.input_path);
    f("has_header", c.has_header);
    f("output_dir", c.output_dir);
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto at = s.find(sep, start);
        out.emplace_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
        throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "' as a number");
    }
    return v;
}

struct Override
{
    const std::string& key;
    const std::string& text;

    void operator()(std::string& field) const { field = text; }
    void operator()(int& field) const { field = parse_number<int>(key, text); }
    void operator()(std::uint64_t& field) const { field = parse_number<std::uint64_t>(key, text); }
    void operator()(double& field) const { field = parse_real(key, text); }
    void operator()(bool& field) const
    {
        const std::string t = trim(text);
        if (t == "true" || t == "1") field = true;
        else if (t == "false" || t == "0") field = false;
        else throw InvalidArgument("config key '" + key + "': expected true or false, got '" + text + "'");
    }
    void operator()(std::vector<std::string>& field) const
    {
        field.clear();
        for (const auto& item : split(text, ',')) {
            const auto t = trim(item);
            if (!t.empty()) field.push_back(t);
        }
    }
};

// Fixed-point with enough digits to compare runs; NA for missing values.
std::string format_value(const std::optional<double>& v)
{
    if (!v || std::isnan(*v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

std::string quote_csv(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool is_k_relative(const std::string& token) { return token == "K" || token == "2K"; }

KRule resolve_k_rule(const std::string& token, int k_true)
{
    if (is_k_relative(token)) {
        if (k_true <= 0) {
            throw InvalidArgument("cluster-count rule '" + token + "' needs a known number of blocks");
        }
        return KRule::fixed(token == "K" ? k_true : 2 * k_true);
    }
    return parse_k_rule(token);
}

ReportRow make_row(const std::string& method, const std::string& metric, const Summary& s, std::uint64_t seed)
{
    ReportRow row{method, metric, std::nullopt, std::nullopt, s.count, seed};
    if (s.count > 0) {
        row.mean = s.mean;
        row.sd = s.sd;
    }
    return row;
}

ReportRow na_row(const std::string& method, const std::string& metric, std::uint64_t seed)
{
    return {method, metric, std::nullopt, std::nullopt, 0, seed};
}

void log_line(const std::string& table, const std::string& method, const std::string& status)
{
    std::clog << "[" << table << "] " << method << ": " << status << '\n';
}

std::string seconds_text(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f s", s);
    return buf;
}

// Runs one method over every model and pools the reports. Failures are
// recorded in the table and yield nullopt.
std::optional<StabilityReport> run_method(const std::string& label, const Pipeline& pipeline,
                                          const ExperimentConfig& config, const BatchSet& batches,
                                          TableResult& table)
{
    const auto start = std::chrono::steady_clock::now();
    std::vector<StabilityReport> parts;
    try {
        for (std::size_t r = 0; r < batches.models.size(); ++r) {
            try {
                parts.push_back(pairwise_harness(batches.models[r], pipeline,
                                                 derive_seed(config.seed, kHarnessStream, r), config.threads));
            } catch (const HarnessError& e) {
                throw std::runtime_error("model " + std::to_string(r) + ", " + e.what());
            }
        }
    } catch (const std::exception& e) {
        table.failures.emplace_back(label, e.what());
        table.wall_seconds[label] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log_line(table.name, label, std::string("FAILED: ") + e.what());
        return std::nullopt;
    }
    auto merged = merge_reports(parts);
    merged.method_id = label;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    table.wall_seconds[label] = elapsed;
    table.flagged_batches[label] = merged.flagged_batches;
    log_line(table.name, label, seconds_text(elapsed));
    return merged;
}

Summary summarize_metric(const std::vector<ConfusionMetrics>& m, double ConfusionMetrics::*field)
{
    std::vector<double> v;
    v.reserve(m.size());
    for (const auto& x : m) v.push_back(x.*field);
    return summarize(v);
}

// Columns sorted by decreasing variance, first `p` kept in original order.
std::vector<int> most_variable_columns(const Matrix& data, int p)
{
    const int cols = static_cast<int>(data.cols());
    std::vector<int> idx(static_cast<std::size_t>(cols));
    std::iota(idx.begin(), idx.end(), 0);
    if (p <= 0 || p >= cols) return idx;
    std::vector<double> var(static_cast<std::size_t>(cols));
    for (int j = 0; j < cols; ++j) {
        const auto col = data.col(j);
        var[static_cast<std::size_t>(j)] = (col.array() - col.mean()).square().sum();
    }
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return var[static_cast<std::size_t>(a)] > var[static_cast<std::size_t>(b)];
    });
    idx.resize(static_cast<std::size_t>(p));
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

// ---------------------------------------------------------------------------

ExperimentConfig config_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw InvalidArgument("config must be a JSON object of flat keys");
    }
    ExperimentConfig config;
    for (const auto& [key, value] : doc.items()) {
        bool found = false;
        visit_fields(config, [&](const char* name, auto& field) {
            if (key != name) return;
            found = true;
            using T = std::decay_t<decltype(field)>;
            try {
                if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                    if (!value.is_number_integer()) throw InvalidArgument("");
                    if constexpr (std::is_same_v<T, std::uint64_t>) {
                        if (value.is_number_unsigned()) field = value.template get<std::uint64_t>();
                        else if (value.template get<std::int64_t>() >= 0) field = static_cast<std::uint64_t>(value.template get<std::int64_t>());
                        else throw InvalidArgument("");
                    } else {
                        field = value.template get<int>();
                    }
                } else if constexpr (std::is_same_v<T, double>) {
                    if (!value.is_number()) throw InvalidArgument("");
                    field = value.template get<double>();
                } else if constexpr (std::is_same_v<T, bool>) {
                    if (!value.is_boolean()) throw InvalidArgument("");
                    field = value.template get<bool>();
                } else if constexpr (std::is_same_v<T, std::string>) {
                    if (!value.is_string()) throw InvalidArgument("");
                    field = value.template get<std::string>();
                } else {
                    if (!value.is_array()) throw InvalidArgument("");
                    field.clear();
                    for (const auto& item : value) {
                        if (!item.is_string()) throw InvalidArgument("");
                        field.push_back(item.template get<std::string>());
                    }
                }
            } catch (const std::exception&) {
                json expected = field;
                throw InvalidArgument("config key '" + key + "' expects a value like " + expected.dump() +
                                      ", got " + value.dump());
            }
        });
        if (!found) {
            throw InvalidArgument("unknown config key '" + key + "'");
        }
    }
    return config;
}

std::string config_to_json(const ExperimentConfig& config)
{
    json doc = json::object();
    visit_fields(config, [&](const char* name, const auto& field) { doc[name] = field; });
    return doc.dump(2);
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    ExperimentConfig c;
    visit_fields(c, [&](const char* name, auto&) { keys.emplace_back(name); });
    return keys;
}

ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides)
{
    ExperimentConfig config;
    if (path) {
        std::ifstream in(*path);
        if (!in) {
            throw InvalidArgument("cannot open config file '" + *path + "'");
        }
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            config = config_from_json(buf.str());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("'" + *path + "': " + e.what());
        }
    }
    for (const auto& [key, text] : overrides) {
        bool found = false;
        visit_fields(config, [&](const char* name, auto& field) {
            if (key != name) return;
            found = true;
            Override{key, text}(field);
        });
        if (!found) {
            throw InvalidArgument("unknown config key '" + key + "'");
        }
    }
    validate(config);
    return config;
}

void validate(const ExperimentConfig& c)
{
    auto require = [](bool ok, const std::string& key, const std::string& what) {
        if (!ok) throw InvalidArgument("config key '" + key + "' " + what);
    };
    require(c.mode == "simulate" || c.mode == "real", "mode", "must be \"simulate\" or \"real\"");
    require(c.mode == "real" ? c.p >= 0 : c.p >= 2, "p", c.mode == "real" ? "must be >= 0" : "must be >= 2");
    require(c.n >= 4, "n", "(batch size) must be >= 4");
    require(c.V >= 2, "V", "must be >= 2");
    require(c.R >= 1, "R", "must be >= 1");
    if (c.mode == "simulate") {
        require(c.K >= 1 && c.K <= c.p, "K", "must lie in [1, p]");
    }
    require(c.within_density > 0.0 && c.within_density <= 1.0, "within_density", "must lie in (0, 1]");
    try {
        parse_precision_diagonal(c.precision_diagonal);
    } catch (const InvalidArgument& e) {
        require(false, "precision_diagonal", e.what());
    }
    for (const auto& l : c.linkages) {
        try {
            parse_linkage(l);
        } catch (const InvalidArgument& e) {
            require(false, "linkages", e.what());
        }
    }
    for (const auto& k : c.k_rules) {
        if (is_k_relative(k)) continue;
        try {
            parse_k_rule(k);
        } catch (const InvalidArgument& e) {
            require(false, "k_rules", e.what());
        }
    }
    for (const auto& r : c.lambda_rules) {
        try {
            parse_network_rule(r);
        } catch (const InvalidArgument& e) {
            require(false, "lambda_rules", e.what());
        }
    }
    const SelectionConfig sc = selection_config(c);
    for (const auto& m : c.two_step_methods) {
        try {
            parse_two_step_method(m, sc, c.mode == "simulate" ? c.K : 0);
        } catch (const InvalidArgument& e) {
            require(false, "two_step_methods", e.what());
        }
    }
    require(c.tol > 0.0, "tol", "must be > 0");
    require(c.max_iter >= 1, "max_iter", "must be >= 1");
    require(c.grid_size >= 1, "grid_size", "must be >= 1");
    require(c.grid_ratio > 0.0 && c.grid_ratio <= 1.0, "grid_ratio", "must lie in (0, 1]");
    require(c.ebic_gamma >= 0.0, "ebic_gamma", "must be >= 0");
    require(c.stars_beta > 0.0 && c.stars_beta <= 0.5, "stars_beta", "must lie in (0, 0.5]");
    require(c.stars_subsamples >= 2, "stars_subsamples", "must be >= 2");
    require(c.escv_folds >= 2, "escv_folds", "must be >= 2");
    require(c.bolasso_resamples >= 1, "bolasso_resamples", "must be >= 1");
    require(c.bolasso_threshold > 0.0 && c.bolasso_threshold <= 1.0, "bolasso_threshold", "must lie in (0, 1]");
    require(c.bolasso_cv_folds >= 2, "bolasso_cv_folds", "must be >= 2");
    require(c.ss_subsamples >= 2, "ss_subsamples", "must be >= 2");
    require(c.ss_pi >= 0.0 && c.ss_pi <= 1.0, "ss_pi", "must lie in [0, 1]");
    require(c.ward == "D2" || c.ward == "D", "ward", "must be \"D2\" or \"D\"");
    require(c.threads >= 0, "threads", "must be >= 0");
    require(c.mode != "real" || !c.input_path.empty(), "input_path", "is required in real mode");
    require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

SelectionConfig selection_config(const ExperimentConfig& c)
{
    SelectionConfig s;
    s.solver.glasso.tol = c.tol;
    s.solver.glasso.max_iter = c.max_iter;
    s.grid.size = c.grid_size;
    s.grid.ratio = c.grid_ratio;
    s.ebic_gamma = c.ebic_gamma;
    s.stars.beta = c.stars_beta;
    s.stars.subsamples = c.stars_subsamples;
    s.escv.folds = c.escv_folds;
    s.bolasso.resamples = c.bolasso_resamples;
    s.bolasso.freq_threshold = c.bolasso_threshold;
    s.bolasso.cv_folds = c.bolasso_cv_folds;
    s.stability_selection.subsamples = c.ss_subsamples;
    s.stability_selection.pi_threshold = c.ss_pi;
    s.agglomerate.ward = c.ward == "D" ? WardVariant::d : WardVariant::d2;
    return s;
}

Pipeline parse_two_step_method(const std::string& spec, const SelectionConfig& config, int k_true)
{
    const auto dash = spec.find('-');
    const auto under = spec.find('_', dash == std::string::npos ? 0 : dash);
    if (dash == std::string::npos || under == std::string::npos || dash == 0 || under == dash + 1 ||
        under + 1 == spec.size()) {
        throw InvalidArgument("two-step method '" + spec + "' is not of the form LINK-KRULE_RULE");
    }
    const Linkage link = parse_linkage(spec.substr(0, dash));
    const std::string k_token = spec.substr(dash + 1, under - dash - 1);
    const NetworkRule rule = parse_network_rule(spec.substr(under + 1));
    if (rule == NetworkRule::stability_selection) {
        throw InvalidArgument("two-step method '" + spec + "': stability selection is one-step only");
    }
    if (is_k_relative(k_token) && k_true <= 0) {
        throw InvalidArgument("two-step method '" + spec + "' needs a known number of blocks");
    }
    return Pipeline::two_step_network(link, resolve_k_rule(k_token, k_true), rule, config);
}

Dataset ingest_csv(const std::string& path, bool has_header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) {
        throw InvalidArgument("'" + path + "' is empty");
    }

    auto where = [&](std::size_t line, std::size_t col) {
        return "'" + path + "' at (" + std::to_string(line) + "," + std::to_string(col) + ")";
    };

    Dataset out;
    std::size_t first = 0;
    std::size_t width = 0;
    if (has_header) {
        for (auto cell : split(lines.front(), ',')) {
            cell = trim(cell);
            if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
            out.labels.push_back(cell);
        }
        width = out.labels.size();
        first = 1;
    }
    if (first >= lines.size()) {
        throw InvalidArgument("'" + path + "' has no data rows");
    }
    if (width == 0) width = split(lines[first], ',').size();

    Matrix data(static_cast<Index>(lines.size() - first), static_cast<Index>(width));
    for (std::size_t l = first; l < lines.size(); ++l) {
        const auto cells = split(lines[l], ',');
        if (cells.size() != width) {
            const std::size_t col = std::min(cells.size(), width) + 1;
            throw InvalidArgument("row with " + std::to_string(cells.size()) + " fields, expected " +
                                  std::to_string(width) + ", " + where(l + 1, col));
        }
        for (std::size_t c = 0; c < width; ++c) {
            const std::string cell = trim(cells[c]);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
                throw InvalidArgument("non-numeric cell '" + cell + "' " + where(l + 1, c + 1));
            }
            data(static_cast<Index>(l - first), static_cast<Index>(c)) = v;
        }
    }
    out.data = std::move(data);
    return out;
}

BatchSet build_batches(const ExperimentConfig& c)
{
    BatchSet out;
    if (c.mode == "real") {
        Dataset raw = ingest_csv(c.input_path, c.has_header);
        const auto keep = most_variable_columns(raw.data, c.p);
        if (static_cast<Index>(keep.size()) < raw.data.cols()) {
            raw.data = select_columns(raw.data, keep);
            if (!raw.labels.empty()) {
                std::vector<std::string> labels;
                for (int j : keep) labels.push_back(raw.labels[static_cast<std::size_t>(j)]);
                raw.labels = std::move(labels);
            }
        }
        out.models.push_back(make_batches(raw, c.n, c.V, derive_seed(c.seed, kBatchSplitStream, 0)));
        out.model_seeds.push_back(c.seed);
        return out;
    }
    const auto diagonal = parse_precision_diagonal(c.precision_diagonal);
    out.k_true = c.K;
    for (int r = 0; r < c.R; ++r) {
        const auto ru = static_cast<std::uint64_t>(r);
        const std::uint64_t model_seed = derive_seed(c.seed, kModelStream, ru);
        const auto model = generate_block_model(c.p, c.K, c.within_density, model_seed, diagonal);
        out.models.push_back(make_batches(model, c.n, c.V, derive_seed(c.seed, kBatchSplitStream, ru)));
        out.model_seeds.push_back(model_seed);
    }
    return out;
}

TableResult run_table1(const ExperimentConfig& config, const BatchSet& batches)
{
    TableResult table;
    table.name = "table1";
    for (const auto& l : config.linkages) {
        Pipeline pipeline = Pipeline::dendrogram(parse_linkage(l));
        pipeline.config = selection_config(config);
        const std::string label(short_name(pipeline.linkage));
        const auto report = run_method(label, pipeline, config, batches, table);
        table.rows.push_back(report ? make_row(label, "d_coph", report->summary, config.seed)
                                    : na_row(label, "d_coph", config.seed));
    }
    return table;
}

std::pair<TableResult, TableResult> run_table2_3(const ExperimentConfig& config, const BatchSet& batches)
{
    TableResult ari;
    ari.name = "table2";
    TableResult ks;
    ks.name = "table3";
    const bool truth = batches.k_true > 0;
    const SelectionConfig sc = selection_config(config);
    for (const auto& l : config.linkages) {
        const Linkage link = parse_linkage(l);
        for (const auto& token : config.k_rules) {
            const std::string label = std::string(short_name(link)) + "-" + token;
            if (is_k_relative(token) && !truth) {
                log_line(ari.name, label, "skipped, the number of blocks is unknown");
                continue;
            }
            Pipeline pipeline = Pipeline::clustering(link, resolve_k_rule(token, batches.k_true));
            pipeline.config = sc;
            const auto report = run_method(label, pipeline, config, batches, ari);
            const bool selects = token == "SH" || token == "BIC" || token == "sh" || token == "bic";
            if (!report) {
                ari.rows.push_back(na_row(label, "ARI", config.seed));
                if (truth) ari.rows.push_back(na_row(label, "ARI_truth", config.seed));
                if (selects) ks.rows.push_back(na_row(label, "selected_k", config.seed));
                continue;
            }
            ari.rows.push_back(make_row(label, "ARI", report->summary, config.seed));
            if (truth) ari.rows.push_back(make_row(label, "ARI_truth", summarize(report->truth_ari), config.seed));
            if (selects) {
                std::vector<double> k(report->selected_k.begin(), report->selected_k.end());
                ks.rows.push_back(make_row(label, "selected_k", summarize(k), config.seed));
                ks.wall_seconds[label] = ari.wall_seconds[label];
                ks.flagged_batches[label] = report->flagged_batches;
            }
        }
    }
    return {ari, ks};
}

TableResult run_table4_5(const ExperimentConfig& config, const BatchSet& batches)
{
    TableResult table;
    table.name = config.mode == "real" ? "table5" : "table4";
    const SelectionConfig sc = selection_config(config);
    const bool truth = batches.k_true > 0;
    const std::vector<std::pair<std::string, double ConfusionMetrics::*>> rates{
        {"precision", &ConfusionMetrics::precision},
        {"recall", &ConfusionMetrics::recall},
        {"specificity", &ConfusionMetrics::specificity},
        {"fdr", &ConfusionMetrics::fdr},
    };

    std::vector<std::pair<std::string, Pipeline>> methods;
    for (const auto& r : config.lambda_rules) {
        const NetworkRule rule = parse_network_rule(r);
        methods.emplace_back(std::string(to_string(rule)), Pipeline::one_step(rule, sc));
    }
    for (const auto& m : config.two_step_methods) {
        methods.emplace_back(m, parse_two_step_method(m, sc, batches.k_true));
    }

    for (const auto& [label, pipeline] : methods) {
        const auto report = run_method(label, pipeline, config, batches, table);
        if (!report) {
            table.rows.push_back(na_row(label, "density", config.seed));
            table.rows.push_back(na_row(label, "hamming", config.seed));
            if (truth)
                for (const auto& [name, field] : rates) table.rows.push_back(na_row(label, name, config.seed));
            continue;
        }
        table.rows.push_back(make_row(label, "density", summarize(report->densities), config.seed));
        table.rows.push_back(make_row(label, "hamming", report->summary, config.seed));
        if (truth) {
            for (const auto& [name, field] : rates) {
                table.rows.push_back(make_row(label, name, summarize_metric(report->truth_metrics, field), config.seed));
            }
        }
    }
    return table;
}

std::string to_csv(const std::vector<ReportRow>& rows)
{
    std::string out = "method,metric,mean,sd,runs,seed\n";
    for (const auto& r : rows) {
        out += quote_csv(r.method) + "," + quote_csv(r.metric) + "," + format_value(r.mean) + "," +
               format_value(r.sd) + "," + std::to_string(r.runs) + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

std::string write_table(const TableResult& table, const ExperimentConfig& config, const std::string& command)
{
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    const fs::path csv = dir / (table.name + ".csv");
    {
        std::ofstream out(csv, std::ios::binary);
        if (!out) throw InvalidArgument("cannot write '" + csv.string() + "'");
        out << to_csv(table.rows);
    }

    json meta = json::object();
    meta["table"] = table.name;
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["timestamp"] = utc_timestamp();
    meta["hardware_threads"] = std::thread::hardware_concurrency();
    meta["config"] = json::parse(config_to_json(config));
    meta["seed"] = config.seed;
    meta["wall_seconds"] = table.wall_seconds;
    meta["flagged_batches"] = table.flagged_batches;
    json failures = json::array();
    for (const auto& [method, message] : table.failures) failures.push_back({{"method", method}, {"error", message}});
    meta["failures"] = failures;
    const fs::path side = dir / (table.name + ".metadata.json");
    std::ofstream out(side, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + side.string() + "'");
    out << meta.dump(2) << '\n';
    return csv.string();
}

std::vector<std::string> write_simulated_data(const ExperimentConfig& c)
{
    namespace fs = std::filesystem;
    const auto model = generate_block_model(c.p, c.K, c.within_density, derive_seed(c.seed, kModelStream, 0),
                                            parse_precision_diagonal(c.precision_diagonal));
    const auto sample = sample_mvn(model.sigma, c.V * c.n, derive_seed(c.seed, kBatchSplitStream, 0));
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);

    auto number = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::vector<std::string> written;
    {
        const fs::path path = dir / "simulated_data.csv";
        std::ofstream out(path, std::ios::binary);
        for (int j = 0; j < c.p; ++j) out << (j ? "," : "") << "X" << (j + 1);
        out << '\n';
        for (Index i = 0; i < sample.data.rows(); ++i) {
            for (Index j = 0; j < sample.data.cols(); ++j) out << (j ? "," : "") << number(sample.data(i, j));
            out << '\n';
        }
        written.push_back(path.string());
    }
    {
        const fs::path path = dir / "true_adjacency.csv";
        std::ofstream out(path, std::ios::binary);
        for (Index i = 0; i < model.truth.rows(); ++i) {
            for (Index j = 0; j < model.truth.cols(); ++j) out << (j ? "," : "") << model.truth(i, j);
            out << '\n';
        }
        written.push_back(path.string());
    }
    {
        const fs::path path = dir / "true_blocks.csv";
        std::ofstream out(path, std::ios::binary);
        out << "variable,block\n";
        for (int j = 0; j < c.p; ++j) out << "X" << (j + 1) << "," << model.blocks[j] << '\n';
        written.push_back(path.string());
    }
    return written;
}

} // namespace stabglasso
