#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <stabglasso/experiments.hpp>

using namespace stabglasso;

namespace {

namespace fs = std::filesystem;

// Scratch directory removed at scope exit.
struct TempDir
{
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("stabglasso_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name, std::ios::binary) << text;
        return (path / name).string();
    }
};

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

ExperimentConfig tiny()
{
    ExperimentConfig c;
    c.p = 12;
    c.K = 3;
    c.n = 30;
    c.V = 3;
    c.R = 2;
    c.grid_size = 8;
    c.stars_subsamples = 4;
    c.bolasso_resamples = 4;
    c.ss_subsamples = 4;
    c.threads = 1;
    return c;
}

} // namespace

TEST_CASE("CSV ingestion")
{
    TempDir dir;
    const auto plain = ingest_csv(dir.write("a.csv", "1,2\n3,4\n"), false);
    CHECK(plain.data == (Matrix(2, 2) << 1, 2, 3, 4).finished());
    CHECK(plain.labels.empty());

    const auto header = ingest_csv(dir.write("b.csv", "a,b\r\n1,2\r\n"), true);
    CHECK(header.labels == std::vector<std::string>{"a", "b"});
    CHECK(header.n() == 1);
    CHECK_THROWS_AS(standardize(header.data, header.labels), InvalidArgument);

    CHECK(error_of([&] { ingest_csv(dir.write("c.csv", "1,2\n3,4\n5,x\n"), false); }).find("(3,2)") !=
          std::string::npos);
    CHECK(error_of([&] { ingest_csv(dir.write("d.csv", "1,2\n3\n"), false); }).find("(2,2)") != std::string::npos);
    CHECK(error_of([&] { ingest_csv(dir.write("e.csv", ""), false); }).find("empty") != std::string::npos);
    CHECK(error_of([&] { ingest_csv(dir.write("f.csv", "a,b\n"), true); }).find("no data rows") != std::string::npos);
    CHECK(error_of([&] { ingest_csv((dir.path / "missing.csv").string(), false); }).find("missing.csv") !=
          std::string::npos);
}

TEST_CASE("configuration keys, files and overrides")
{
    const ExperimentConfig defaults;
    CHECK(defaults.p == 100);
    CHECK(defaults.n == 70);
    CHECK(defaults.V == 17);
    CHECK(defaults.K == 15);
    CHECK(defaults.R == 5);

    const auto round = config_from_json(config_to_json(tiny()));
    CHECK(config_to_json(round) == config_to_json(tiny()));
    CHECK(config_keys().size() == 31);

    CHECK(error_of([] { config_from_json(R"({"q": 1})"); }).find("'q'") != std::string::npos);
    CHECK(error_of([] { config_from_json(R"({"p": "ten"})"); }).find("'p'") != std::string::npos);
    CHECK(error_of([] { config_from_json(R"({"linkages": "SL"})"); }).find("'linkages'") != std::string::npos);
    CHECK(error_of([] { config_from_json("[1]"); }).find("object") != std::string::npos);

    TempDir dir;
    const auto path = dir.write("c.json", R"({"p": 20, "K": 4, "linkages": ["SL", "WL"]})");
    const auto c = load_config(path, {{"K", "5"}, {"lambda_rules", "BIC, EBIC"}, {"has_header", "true"}});
    CHECK(c.p == 20);
    CHECK(c.K == 5);
    CHECK(c.linkages == std::vector<std::string>{"SL", "WL"});
    CHECK(c.lambda_rules == std::vector<std::string>{"BIC", "EBIC"});
    CHECK(c.has_header);

    CHECK(error_of([&] { load_config(path, {{"K", "50"}}); }).find("'K'") != std::string::npos);
    CHECK(error_of([&] { load_config(path, {{"n", "seventy"}}); }).find("'n'") != std::string::npos);
    CHECK(error_of([&] { load_config(std::nullopt, {{"mode", "real"}}); }).find("'input_path'") !=
          std::string::npos);
    CHECK(error_of([&] { load_config(std::nullopt, {{"two_step_methods", "SL-SH_SS"}}); })
              .find("'two_step_methods'") != std::string::npos);
    CHECK(error_of([&] { load_config(std::nullopt, {{"linkages", "SL,XL"}}); }).find("'linkages'") !=
          std::string::npos);
    CHECK(error_of([&] { load_config((dir.path / "none.json").string(), {}); }).find("none.json") !=
          std::string::npos);
}

TEST_CASE("two-step method specs")
{
    const SelectionConfig sc;
    CHECK(parse_two_step_method("SL-SH_BIC", sc).id() == "SL-SH_BIC");
    CHECK(parse_two_step_method("AL-2_sparse", sc).k_rule.k == 2);
    CHECK(parse_two_step_method("WL-2K_EBIC", sc, 15).k_rule.k == 30);
    CHECK_THROWS_AS(parse_two_step_method("WL-2K_EBIC", sc, 0), InvalidArgument);
    CHECK_THROWS_AS(parse_two_step_method("SLSH_BIC", sc), InvalidArgument);
    CHECK_THROWS_AS(parse_two_step_method("SL-SH_", sc), InvalidArgument);
}

TEST_CASE("CSV reports quote fields and print NA")
{
    const std::vector<ReportRow> rows{{"SL", "d_coph", 0.5, 0.25, 3, 7}, {"a,\"b\"", "x", std::nullopt, std::nullopt, 0, 7}};
    CHECK(to_csv(rows) == "method,metric,mean,sd,runs,seed\n"
                          "SL,d_coph,0.500000,0.250000,3,7\n"
                          "\"a,\"\"b\"\"\",x,NA,NA,0,7\n");
}

TEST_CASE("table 1 with two batches has one comparison per model")
{
    auto c = tiny();
    c.V = 2;
    c.R = 1;
    c.linkages = {"SL", "AL"};
    const auto table = run_table1(c, build_batches(c));
    REQUIRE(table.rows.size() == 2);
    for (const auto& r : table.rows) {
        CHECK(r.runs == 1);
        CHECK(r.sd.value() == 0.0);
        CHECK(r.metric == "d_coph");
    }
}

TEST_CASE("a one-cluster rule is perfectly stable for every linkage")
{
    auto c = tiny();
    c.k_rules = {"1", "SH"};
    const auto [ari, ks] = run_table2_3(c, build_batches(c));
    for (const auto& r : ari.rows) {
        if (r.method.ends_with("-1") && r.metric == "ARI") CHECK(r.mean.value() == 1.0);
    }
    CHECK(ks.rows.size() == 5);
    for (const auto& r : ks.rows) CHECK(r.metric == "selected_k");
}

// Stability selection reports its stable set from the subsamples, whose
// correlations can exceed the full-data maximum, so it is left out.
TEST_CASE("a single-point grid gives empty networks")
{
    auto c = tiny();
    c.grid_size = 1;
    const auto table = run_table4_5(c, build_batches(c));
    CHECK(table.failures.empty());
    CHECK(table.name == "table4");
    std::set<std::string> methods;
    for (const auto& r : table.rows) {
        methods.insert(r.method);
        if (r.method != "SS" && (r.metric == "density" || r.metric == "hamming")) CHECK(r.mean.value() == 0.0);
    }
    CHECK(methods.size() == 12);
}

TEST_CASE("identical configurations give byte-identical tables")
{
    auto c = tiny();
    c.lambda_rules = {"EBIC", "STARS"};
    c.two_step_methods = {"SL-SH_BIC"};
    const auto a = to_csv(run_table4_5(c, build_batches(c)).rows);
    c.threads = 3;
    const auto b = to_csv(run_table4_5(c, build_batches(c)).rows);
    CHECK(a == b);
    c.seed = 2;
    CHECK(to_csv(run_table4_5(c, build_batches(c)).rows) != a);
}

TEST_CASE("failing methods become NA rows")
{
    auto c = tiny();
    c.lambda_rules = {"BIC"};
    c.two_step_methods = {};
    auto batches = build_batches(c);
    batches.models[1][2].data.col(4).setZero();
    const auto table = run_table4_5(c, batches);
    REQUIRE(table.failures.size() == 1);
    CHECK(table.failures.front().second.find("model 1, batch 2") != std::string::npos);
    for (const auto& r : table.rows) CHECK_FALSE(r.mean.has_value());
}

TEST_CASE("real mode splits the rows into batches")
{
    TempDir dir;
    auto c = tiny();
    c.V = 17;
    c.n = 70;
    c.p = 6;
    c.K = 2;
    c.output_dir = (dir.path / "sim").string();
    // 1212 rows written by the simulator: 17 * 70 = 1190 are used.
    auto sim = c;
    sim.n = 1212;
    sim.V = 1;
    const auto files = write_simulated_data(sim);
    REQUIRE(files.size() == 3);

    c.mode = "real";
    c.input_path = files.front();
    c.has_header = true;
    const auto batches = build_batches(c);
    REQUIRE(batches.models.size() == 1);
    CHECK(batches.models.front().size() == 17);
    CHECK(batches.k_true == 0);
    for (const auto& b : batches.models.front()) CHECK(b.n() == 70);

    c.p = 4;
    const auto fewer = build_batches(c);
    CHECK(fewer.models.front().front().p() == 4);
    CHECK(fewer.models.front().front().labels.size() == 4);

    c.linkages = {"SL"};
    c.k_rules = {"K", "SH"};
    const auto [ari, ks] = run_table2_3(c, batches);
    CHECK(ari.rows.size() == 1);
    CHECK(run_table4_5(c, batches).name == "table5");

    const auto csv = write_table(run_table1(c, batches), c, "test");
    CHECK(fs::exists(csv));
    CHECK(fs::exists(fs::path(c.output_dir) / "table1.metadata.json"));
}
