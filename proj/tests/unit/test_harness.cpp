#include <doctest.h>

#include <cmath>

#include <stabglasso/harness.hpp>

#include "oracles.hpp"

using namespace stabglasso;

namespace {

std::vector<Dataset> small_batches(int v, std::uint64_t seed, int p = 12)
{
    const auto m = generate_block_model(p, 3, 0.6, seed);
    return make_batches(m, 40, v, seed + 1);
}

// Cophenetic matrices from the path-enumeration oracle (exponential in p), each scaled by its maximum.
double coph_oracle(const Dataset& a, const Dataset& b)
{
    auto scaled = [](const Dataset& d) {
        const Matrix r = sample_correlation(d.data);
        Matrix diss = (1.0 - r.array().abs()).matrix();
        diss.diagonal().setZero();
        Matrix u = oracle::minimax_by_path_enumeration(diss);
        return Matrix(u / u.maxCoeff());
    };
    return (scaled(a) - scaled(b)).cwiseAbs().maxCoeff();
}

double mean_of(const std::vector<double>& v)
{
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

TEST_CASE("method labels")
{
    CHECK(Pipeline::dendrogram(Linkage::single).id() == "SL");
    CHECK(Pipeline::clustering(Linkage::complete, KRule::slope_heuristic()).id() == "CL-SH");
    CHECK(Pipeline::clustering(Linkage::ward, KRule::fixed(30)).id() == "WL-30");
    CHECK(Pipeline::one_step(NetworkRule::ebic).id() == "EBIC");
    CHECK(Pipeline::two_step_network(Linkage::single, KRule::slope_heuristic(), NetworkRule::bolasso).id() ==
          "SL-SH_BL");
    CHECK(Pipeline::two_step_network(Linkage::average, KRule::fixed(2), NetworkRule::sparse_max).id() ==
          "AL-2_sparse");
    CHECK(Pipeline::one_step(NetworkRule::bic).metric() == "hamming");
}

TEST_CASE("two batches give one comparison")
{
    const auto report = pairwise_harness(small_batches(2, 1), Pipeline::dendrogram(Linkage::average), 0);
    CHECK(report.pairwise.size() == 1);
    CHECK(report.summary.count == 1);
    CHECK(report.summary.sd == 0.0);
    std::vector<Dataset> one{small_batches(2, 1).front()};
    CHECK_THROWS_AS(pairwise_harness(one, Pipeline::dendrogram(Linkage::single), 0), InvalidArgument);
}

TEST_CASE("identical batches are perfectly stable")
{
    const auto base = small_batches(1, 3).front();
    const std::vector<Dataset> same(4, base);
    CHECK(pairwise_harness(same, Pipeline::dendrogram(Linkage::ward), 0).summary.mean == 0.0);
    CHECK(pairwise_harness(same, Pipeline::clustering(Linkage::single, KRule::bic()), 0).summary.mean == 1.0);
    const auto net = pairwise_harness(same, Pipeline::one_step(NetworkRule::ebic), 0);
    CHECK(net.summary.mean == 0.0);
    CHECK(net.pairwise.size() == 6);
}

TEST_CASE("single-linkage aggregate matches an independent recomputation")
{
    const auto batches = small_batches(5, 7, 7);
    const auto report = pairwise_harness(batches, Pipeline::dendrogram(Linkage::single), 11);
    std::vector<double> expected;
    for (std::size_t i = 0; i < batches.size(); ++i)
        for (std::size_t j = i + 1; j < batches.size(); ++j) expected.push_back(coph_oracle(batches[i], batches[j]));
    REQUIRE(report.pairwise.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(report.pairwise[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    }
    CHECK(report.summary.mean == doctest::Approx(mean_of(expected)).epsilon(1e-12));
    CHECK(report.summary.sd == doctest::Approx(sd_of(expected)).epsilon(1e-12));
}

TEST_CASE("clustering and network reports against recomputation")
{
    const auto batches = small_batches(4, 13);
    const auto clust = Pipeline::clustering(Linkage::average, KRule::slope_heuristic());
    const auto report = pairwise_harness(batches, clust, 5);
    std::vector<Partition> parts;
    for (const auto& b : batches) parts.push_back(cluster_variables(b.data, Linkage::average, KRule::slope_heuristic()).partition);
    std::size_t k = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            CHECK(report.pairwise[k++] == oracle::ari_by_pair_counting(parts[i].labels(), parts[j].labels()));
        }
        CHECK(report.selected_k[i] == parts[i].cluster_count());
    }
    CHECK(report.truth_ari.size() == 4);
    CHECK(report.densities.empty());

    SelectionConfig config;
    config.grid.size = 12;
    const auto net = Pipeline::one_step(NetworkRule::bic, config);
    const auto nr = pairwise_harness(batches, net, 5);
    std::vector<GraphEstimate> graphs;
    for (std::size_t b = 0; b < batches.size(); ++b)
        graphs.push_back(one_step_estimate(batches[b].data, NetworkRule::bic, config, 0).estimate);
    k = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        CHECK(nr.densities[i] == graphs[i].density());
        for (std::size_t j = i + 1; j < graphs.size(); ++j) {
            CHECK(nr.pairwise[k++] == oracle::hamming_by_counting(graphs[i].adjacency, graphs[j].adjacency));
        }
    }
    CHECK(nr.truth_metrics.size() == 4);
    for (const auto& m : nr.truth_metrics) {
        CHECK(m.precision >= 0.0);
        CHECK(m.precision <= 1.0);
        CHECK(m.recall <= 1.0);
    }
}

TEST_CASE("thread count does not change results")
{
    const auto batches = small_batches(6, 17);
    SelectionConfig config;
    config.grid.size = 10;
    config.stars.subsamples = 4;
    const auto pipeline = Pipeline::two_step_network(Linkage::single, KRule::slope_heuristic(), NetworkRule::stars, config);
    const auto serial = pairwise_harness(batches, pipeline, 99, 1);
    const auto parallel = pairwise_harness(batches, pipeline, 99, 4);
    CHECK(serial.pairwise == parallel.pairwise);
    CHECK(serial.densities == parallel.densities);
}

TEST_CASE("failures name the batch")
{
    auto batches = small_batches(4, 19);
    batches[2].data.col(0).setConstant(1.0);
    try {
        pairwise_harness(batches, Pipeline::clustering(Linkage::single, KRule::bic()), 0, 2);
        FAIL("expected HarnessError");
    } catch (const HarnessError& e) {
        CHECK(e.batch_index() == 2);
        CHECK(std::string(e.what()).rfind("batch 2", 0) == 0);
    }
}

TEST_CASE("merged reports pool all pairs")
{
    const auto pipeline = Pipeline::dendrogram(Linkage::complete);
    const auto a = pairwise_harness(small_batches(3, 23), pipeline, 0);
    const auto b = pairwise_harness(small_batches(4, 29), pipeline, 0);
    const auto merged = merge_reports({a, b});
    CHECK(merged.pairwise.size() == 9);
    std::vector<double> all = a.pairwise;
    all.insert(all.end(), b.pairwise.begin(), b.pairwise.end());
    CHECK(merged.summary.mean == doctest::Approx(mean_of(all)).epsilon(1e-12));
    CHECK_THROWS_AS(merge_reports({a, pairwise_harness(small_batches(3, 23), Pipeline::dendrogram(Linkage::single), 0)}),
                    InvalidArgument);
}
