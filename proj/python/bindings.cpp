#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stabglasso/dendro.hpp>
#include <stabglasso/experiments.hpp>
#include <stabglasso/glasso.hpp>
#include <stabglasso/harness.hpp>
#include <stabglasso/hclust.hpp>
#include <stabglasso/modelselect.hpp>
#include <stabglasso/simgen.hpp>
#include <stabglasso/stability.hpp>

namespace py = pybind11;
using namespace stabglasso;

namespace {

py::dict graph_dict(const GraphEstimate& g)
{
    py::dict d;
    d["precision"] = g.precision;
    d["adjacency"] = g.adjacency;
    d["lambda"] = g.lambda ? py::cast(*g.lambda) : py::none();
    d["edge_count"] = g.edge_count();
    d["density"] = g.density();
    return d;
}

SelectionConfig selection_from(const std::string& config_json)
{
    return selection_config(config_from_json(config_json.empty() ? "{}" : config_json));
}

py::list rows_list(const std::vector<ReportRow>& rows)
{
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["method"] = r.method;
        d["metric"] = r.metric;
        d["mean"] = r.mean ? py::cast(*r.mean) : py::none();
        d["sd"] = r.sd ? py::cast(*r.sd) : py::none();
        d["runs"] = r.runs;
        d["seed"] = r.seed;
        out.append(d);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_stabglasso, m)
{
    m.doc() = "Stability of dendrograms, clusterings and graphical-lasso networks.";
    m.attr("__version__") = kVersion;

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<Dendrogram>(m, "Dendrogram", "Merge tree; leaves are 0..p-1 and merge i creates cluster p+i.")
        .def(py::init([](int p, const std::vector<std::tuple<int, int, double>>& merges) {
                 std::vector<Merge> ms;
                 for (const auto& [a, b, h] : merges) ms.push_back({a, b, h});
                 return Dendrogram(p, std::move(ms));
             }),
             py::arg("leaf_count"), py::arg("merges"))
        .def_property_readonly("leaf_count", &Dendrogram::leaf_count)
        .def_property_readonly("merges",
                               [](const Dendrogram& t) {
                                   std::vector<std::tuple<int, int, double>> out;
                                   for (const auto& mg : t.merges()) out.emplace_back(mg.left, mg.right, mg.height);
                                   return out;
                               })
        .def("cophenetic", [](const Dendrogram& t) { return dendrogram_to_ultrametric(t).matrix(); },
             "Cophenetic (ultrametric) matrix.")
        .def("cut", [](const Dendrogram& t, int k) { return cut_k(t, k).labels(); }, py::arg("k"),
             "Cluster labels with k clusters.")
        .def("cut_at_height", [](const Dendrogram& t, double h) { return cut_at_height(t, h).labels(); },
             py::arg("height"));

    // Simulation and preprocessing
    m.def(
        "generate_block_model",
        [](int p, int k, double within_density, std::uint64_t seed, const std::string& diagonal) {
            const auto bm = generate_block_model(p, k, within_density, seed, parse_precision_diagonal(diagonal));
            py::dict d;
            d["sigma"] = bm.sigma;
            d["truth"] = bm.truth;
            d["blocks"] = bm.blocks.labels();
            d["block_sizes"] = bm.block_sizes;
            return d;
        },
        py::arg("p"), py::arg("k"), py::arg("within_density") = kDefaultWithinDensity, py::arg("seed") = 0,
        py::arg("diagonal") = "shift", "Block-diagonal covariance with a sparse per-block precision.");
    m.def("sample_mvn", [](const Matrix& sigma, int n, std::uint64_t seed) { return sample_mvn(sigma, n, seed).data; },
          py::arg("sigma"), py::arg("n"), py::arg("seed") = 0);
    m.def("standardize", [](const Matrix& x) { return standardize(x); }, py::arg("data"));
    m.def("sample_correlation", &sample_correlation, py::arg("data"));

    // Dendrograms
    m.def("correlation_dissimilarity", [](const Matrix& s) { return correlation_dissimilarity(s).matrix(); },
          py::arg("s"), "1 - |S| off the diagonal.");
    m.def("minimax_ultrametric",
          [](const Matrix& a) { return minimax_ultrametric(DissimilarityMatrix(a)).matrix(); },
          py::arg("dissimilarity"));
    m.def(
        "agglomerate",
        [](const Matrix& d, const std::string& linkage) { return agglomerate(DissimilarityMatrix(d), parse_linkage(linkage)); },
        py::arg("dissimilarity"), py::arg("linkage") = "single");
    m.def("cophenetic_distance", py::overload_cast<const Dendrogram&, const Dendrogram&>(&cophenetic_distance));
    m.def("normalized_cophenetic_distance",
          py::overload_cast<const Dendrogram&, const Dendrogram&>(&normalized_cophenetic_distance));

    // Graphical lasso
    m.def(
        "glasso",
        [](const Matrix& s, double lambda, bool two_step, double tol, int max_iter) {
            GlassoOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            return graph_dict(two_step ? glasso_two_step(s, lambda, opts) : glasso_solve(s, lambda, opts));
        },
        py::arg("s"), py::arg("lam"), py::arg("two_step") = true, py::arg("tol") = 1e-4, py::arg("max_iter") = 100);
    m.def("lambda_grid", &lambda_grid, py::arg("s"), py::arg("n_points") = 50, py::arg("ratio") = 0.01);
    m.def("screen_components", [](const Matrix& s, double lambda) { return screen_components(s, lambda).partition.labels(); },
          py::arg("s"), py::arg("lam"));

    // Metrics
    m.def(
        "adjusted_rand_index",
        [](const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(Partition(a), Partition(b)); },
        py::arg("a"), py::arg("b"));
    m.def("normalized_hamming", py::overload_cast<const Adjacency&, const Adjacency&>(&normalized_hamming),
          py::arg("a"), py::arg("b"));
    m.def(
        "confusion_metrics",
        [](const Adjacency& est, const Adjacency& truth) {
            const auto c = confusion_metrics(est, truth);
            py::dict d;
            d["tp"] = c.true_positives;
            d["fp"] = c.false_positives;
            d["tn"] = c.true_negatives;
            d["fn"] = c.false_negatives;
            d["precision"] = c.precision;
            d["recall"] = c.recall;
            d["specificity"] = c.specificity;
            d["fdr"] = c.fdr;
            d["density"] = c.density;
            return d;
        },
        py::arg("estimate"), py::arg("truth"));

    // Model selection
    m.def(
        "cluster_variables",
        [](const Matrix& data, const std::string& linkage, const std::string& rule) {
            const auto sel = cluster_variables(data, parse_linkage(linkage), parse_k_rule(rule));
            py::dict d;
            d["labels"] = sel.partition.labels();
            d["k"] = sel.k;
            d["kappa"] = sel.kappa;
            d["fell_back_to_bic"] = sel.fell_back_to_bic;
            return d;
        },
        py::arg("data"), py::arg("linkage") = "single", py::arg("rule") = "SH");
    m.def(
        "one_step_estimate",
        [](const Matrix& data, const std::string& rule, std::uint64_t seed, const std::string& config_json) {
            const auto res = one_step_estimate(data, parse_network_rule(rule), selection_from(config_json), seed);
            auto d = graph_dict(res.estimate);
            d["flagged"] = res.flagged;
            return d;
        },
        py::arg("data"), py::arg("rule") = "EBIC", py::arg("seed") = 0, py::arg("config_json") = "",
        "Penalty selection on all variables; config_json may set solver and rule keys.");
    m.def(
        "two_step_estimate",
        [](const Matrix& data, const std::string& linkage, const std::string& k_rule, const std::string& rule,
           std::uint64_t seed, const std::string& config_json) {
            const auto res = two_step_estimate(data, parse_linkage(linkage), parse_k_rule(k_rule),
                                               parse_network_rule(rule), selection_from(config_json), seed);
            auto d = graph_dict(res.estimate);
            d["modules"] = res.modules.labels();
            d["module_lambdas"] = res.module_lambdas;
            d["flagged"] = res.flagged;
            return d;
        },
        py::arg("data"), py::arg("linkage") = "single", py::arg("k_rule") = "SH", py::arg("rule") = "BIC",
        py::arg("seed") = 0, py::arg("config_json") = "");

    // Experiments
    m.def("default_config", [] { return config_to_json(ExperimentConfig{}); }, "Default experiment config as JSON.");
    m.def(
        "run_tables",
        [](const std::string& config_json, const std::vector<std::string>& tables) {
            const auto config = config_from_json(config_json);
            validate(config);
            py::gil_scoped_release release;
            const auto batches = build_batches(config);
            std::map<std::string, std::vector<ReportRow>> out;
            for (const auto& t : tables) {
                if (t == "table1") out[t] = run_table1(config, batches).rows;
                else if (t == "table2" || t == "table3") {
                    const auto [ari, ks] = run_table2_3(config, batches);
                    out[t] = t == "table2" ? ari.rows : ks.rows;
                } else if (t == "table4") out[t] = run_table4_5(config, batches).rows;
                else throw InvalidArgument("unknown table '" + t + "'");
            }
            py::gil_scoped_acquire acquire;
            py::dict d;
            for (const auto& [name, rows] : out) d[py::str(name)] = rows_list(rows);
            return d;
        },
        py::arg("config_json"), py::arg("tables") = std::vector<std::string>{"table1"},
        "Runs the named tables; returns {table: [row dicts]}.");
}
