#include <doctest.h>

#include <random>

#include <stabglasso/stability.hpp>

#include "oracles.hpp"

using namespace stabglasso;

namespace {

Adjacency edges(int p, std::initializer_list<std::pair<int, int>> list)
{
    Adjacency a = Adjacency::Zero(p, p);
    for (auto [i, j] : list) a(i, j) = a(j, i) = 1;
    return a;
}

Adjacency random_graph(int p, double density, std::mt19937_64& rng)
{
    std::bernoulli_distribution coin(density);
    Adjacency a = Adjacency::Zero(p, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < j; ++i)
            if (coin(rng)) a(i, j) = a(j, i) = 1;
    return a;
}

} // namespace

TEST_CASE("adjusted Rand index examples")
{
    const Partition a({0, 0, 1, 1});
    CHECK(adjusted_rand_index(a, a) == 1.0);
    CHECK(adjusted_rand_index(Partition::singletons(6), Partition::single_cluster(6)) == 0.0);
    CHECK(adjusted_rand_index(a, Partition({0, 1, 0, 1})) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(adjusted_rand_index(a, Partition::singletons(3)), InvalidArgument);
}

TEST_CASE("adjusted Rand index matches pair counting exactly")
{
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = 2 + trial % 40;
        std::uniform_int_distribution<int> label(0, 1 + trial % 7);
        std::vector<int> x(static_cast<std::size_t>(p));
        std::vector<int> y(static_cast<std::size_t>(p));
        for (auto& v : x) v = label(rng);
        for (auto& v : y) v = label(rng);
        const double got = adjusted_rand_index(Partition(x), Partition(y));
        CHECK(got == oracle::ari_by_pair_counting(x, y));
        CHECK(got == adjusted_rand_index(Partition(y), Partition(x)));
    }
}

TEST_CASE("normalized Hamming examples")
{
    const auto two = edges(3, {{0, 1}, {1, 2}});
    const auto one = edges(3, {{0, 1}});
    CHECK(normalized_hamming(two, one) == doctest::Approx(2.0 / 3.0));
    CHECK(normalized_hamming(two, two) == 0.0);
    CHECK(normalized_hamming(one, edges(3, {{1, 2}})) == 2.0);
    CHECK(normalized_hamming(Adjacency::Zero(3, 3), Adjacency::Zero(3, 3)) == 0.0);
    CHECK(normalized_hamming(Adjacency::Zero(3, 3), one) == 2.0);
    CHECK_THROWS_AS(normalized_hamming(one, Adjacency::Zero(4, 4)), InvalidArgument);
}

TEST_CASE("normalized Hamming matches pair counting exactly")
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> dens(0.0, 0.5);
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = 2 + trial % 30;
        const auto a = random_graph(p, dens(rng), rng);
        const auto b = random_graph(p, dens(rng), rng);
        const double got = normalized_hamming(a, b);
        CHECK(got == oracle::hamming_by_counting(a, b));
        CHECK(got == normalized_hamming(b, a));
        CHECK(got >= 0.0);
        CHECK(got <= 2.0);
    }
}

TEST_CASE("confusion metrics")
{
    // Five variables, ten pairs; truth has three edges.
    const auto truth = edges(5, {{0, 1}, {1, 2}, {3, 4}});
    const auto est = edges(5, {{0, 1}, {1, 2}, {0, 4}});
    const auto m = confusion_metrics(est, truth);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.fdr == doctest::Approx(1.0 / 3.0));
    CHECK(m.specificity == doctest::Approx(6.0 / 7.0));
    CHECK(m.density == doctest::Approx(0.3));

    const auto same = confusion_metrics(truth, truth);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.specificity == 1.0);
    CHECK(same.fdr == 0.0);

    const auto empty = confusion_metrics(Adjacency::Zero(5, 5), truth);
    CHECK(empty.recall == 0.0);
    CHECK(empty.specificity == 1.0);
    CHECK(empty.precision == 1.0);
    CHECK(empty.vacuous_precision);
}

TEST_CASE("summaries use the n - 1 divisor")
{
    const auto s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == 2.5);
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.count == 4);
    const auto one = summarize({0.7});
    CHECK(one.mean == 0.7);
    CHECK(one.sd == 0.0);
    CHECK(std::isnan(summarize({}).mean));
}
