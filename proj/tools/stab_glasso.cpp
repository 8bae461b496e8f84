// stab-glasso: reproduces the stability tables from simulated or real data.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <stabglasso/experiments.hpp>

using namespace stabglasso;

namespace {

struct Flags
{
    std::optional<std::string> config_path;
    std::map<std::string, std::string> values;
    bool has_header = false;
};

// Shared flags: --config plus one flag per config key, with short aliases for the common ones.
void add_common(CLI::App* cmd, Flags& flags)
{
    cmd->add_option("--config", flags.config_path, "JSON file of config keys");
    const std::map<std::string, std::string> alias{{"output_dir", "--out"}};
    for (const auto& key : config_keys()) {
        if (key == "has_header") continue;
        std::string names = "--" + key;
        if (auto it = alias.find(key); it != alias.end()) names += "," + it->second;
        cmd->add_option(names, flags.values[key], "config key '" + key + "'");
    }
    cmd->add_flag("--has-header,--has_header", flags.has_header, "first CSV row holds variable names");
}

ExperimentConfig resolve(const CLI::App* cmd, const Flags& flags)
{
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& key : config_keys()) {
        if (key == "has_header") continue;
        if (cmd->get_option("--" + key)->count() > 0) overrides.emplace_back(key, flags.values.at(key));
    }
    if (flags.has_header) overrides.emplace_back("has_header", "true");
    return load_config(flags.config_path, overrides);
}

std::string command_line(int argc, char** argv)
{
    std::string out;
    for (int i = 0; i < argc; ++i) out += (i ? " " : "") + std::string(argv[i]);
    return out;
}

void emit(const TableResult& table, const ExperimentConfig& config, const std::string& command)
{
    const auto path = write_table(table, config, command);
    std::cout << path << '\n';
}

int ingest_check(const ExperimentConfig& c)
{
    const Dataset d = ingest_csv(c.input_path, c.has_header);
    std::cout << "rows " << d.n() << ", columns " << d.p() << (d.labels.empty() ? "" : ", header present") << '\n';
    standardize(d.data, d.labels);
    const long needed = static_cast<long>(c.V) * c.n;
    std::cout << "standardization ok\n";
    if (d.n() < needed) {
        std::cout << "too few rows for " << c.V << " batches of " << c.n << " (need " << needed << ")\n";
        return 1;
    }
    std::cout << c.V << " batches of " << c.n << " use " << needed << " of " << d.n() << " rows\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stability of dendrograms, clusterings and graphical-lasso networks across resampled batches"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate-data", "write a simulated dataset with its true graph and blocks"},
        {"table1", "normalized cophenetic distance between dendrograms, per linkage"},
        {"table2", "pairwise ARI of the clusterings, per linkage and cluster-count rule"},
        {"table3", "mean number of clusters chosen by the slope heuristic and BIC"},
        {"table4", "density, Hamming stability and accuracy of the network estimators"},
        {"ingest-check", "parse a CSV and check it can be batched"},
        {"run-all", "tables 1 to 4 from one set of batches"},
    };
    std::map<std::string, Flags> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        subs[name] = app.add_subcommand(name, help);
        add_common(subs[name], flags[name]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string command = command_line(argc, argv);
    try {
        for (const auto& [name, cmd] : subs) {
            if (!cmd->parsed()) continue;
            const ExperimentConfig config = resolve(cmd, flags[name]);
            if (name == "ingest-check") {
                if (config.input_path.empty()) throw InvalidArgument("config key 'input_path' is required");
                return ingest_check(config);
            }
            if (name == "simulate-data") {
                for (const auto& path : write_simulated_data(config)) std::cout << path << '\n';
                return 0;
            }
            const BatchSet batches = build_batches(config);
            if (name == "table1" || name == "run-all") emit(run_table1(config, batches), config, command);
            if (name == "table2" || name == "table3" || name == "run-all") {
                const auto [ari, ks] = run_table2_3(config, batches);
                if (name != "table3") emit(ari, config, command);
                if (name != "table2") emit(ks, config, command);
            }
            if (name == "table4" || name == "run-all") emit(run_table4_5(config, batches), config, command);
            return 0;
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
