#include <stabglasso/harness.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

namespace stabglasso {

namespace {

constexpr std::uint64_t kBatchStream = 21;

int worker_count(int threads, int jobs)
{
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(t, 1, std::max(jobs, 1));
}

// Calls job(i) for i in [0, count) on up to `threads` workers.
template <class Job>
void for_each_index(int count, int threads, Job&& job)
{
    const int workers = worker_count(threads, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) job(i);
        });
    }
}

} // namespace

Pipeline Pipeline::dendrogram(Linkage link)
{
    Pipeline p;
    p.kind = PipelineKind::dendrogram;
    p.linkage = link;
    return p;
}

Pipeline Pipeline::clustering(Linkage link, KRule rule)
{
    Pipeline p;
    p.kind = PipelineKind::clustering;
    p.linkage = link;
    p.k_rule = rule;
    return p;
}

Pipeline Pipeline::one_step(NetworkRule rule, SelectionConfig config)
{
    Pipeline p;
    p.kind = PipelineKind::network;
    p.rule = rule;
    p.config = std::move(config);
    return p;
}

Pipeline Pipeline::two_step_network(Linkage link, KRule k_rule, NetworkRule rule, SelectionConfig config)
{
    Pipeline p = one_step(rule, std::move(config));
    p.two_step = true;
    p.linkage = link;
    p.k_rule = k_rule;
    return p;
}

std::string Pipeline::id() const
{
    const std::string link(short_name(linkage));
    switch (kind) {
    case PipelineKind::dendrogram: return link;
    case PipelineKind::clustering: return link + "-" + to_string(k_rule);
    case PipelineKind::network:
        if (!two_step) return std::string(to_string(rule));
        return link + "-" + to_string(k_rule) + "_" + std::string(to_string(rule));
    }
    return "?";
}

std::string Pipeline::metric() const
{
    switch (kind) {
    case PipelineKind::dendrogram: return "d_coph";
    case PipelineKind::clustering: return "ARI";
    case PipelineKind::network: return "hamming";
    }
    return "?";
}

BatchOutcome run_pipeline(const Dataset& batch, const Pipeline& pipeline, std::uint64_t seed)
{
    BatchOutcome out;
    switch (pipeline.kind) {
    case PipelineKind::dendrogram: {
        const Matrix r = sample_correlation(batch.data);
        out.dendrogram = agglomerate(correlation_dissimilarity(r), pipeline.linkage, pipeline.config.agglomerate);
        break;
    }
    case PipelineKind::clustering: {
        auto sel = cluster_variables(batch.data, pipeline.linkage, pipeline.k_rule, pipeline.config.agglomerate);
        out.partition = std::move(sel.partition);
        out.flagged = sel.fell_back_to_bic;
        break;
    }
    case PipelineKind::network: {
        auto res = pipeline.two_step ? two_step_estimate(batch.data, pipeline.linkage, pipeline.k_rule,
                                                         pipeline.rule, pipeline.config, seed)
                                     : one_step_estimate(batch.data, pipeline.rule, pipeline.config, seed);
        out.partition = std::move(res.modules);
        out.network = std::move(res.estimate);
        out.flagged = res.flagged;
        break;
    }
    }
    return out;
}

double compare_outcomes(const BatchOutcome& a, const BatchOutcome& b, PipelineKind kind)
{
    switch (kind) {
    case PipelineKind::dendrogram: return normalized_cophenetic_distance(a.dendrogram.value(), b.dendrogram.value());
    case PipelineKind::clustering: return adjusted_rand_index(a.partition.value(), b.partition.value());
    case PipelineKind::network: return normalized_hamming(a.network.value().adjacency, b.network.value().adjacency);
    }
    return 0.0;
}

HarnessError::HarnessError(int batch, const std::string& what)
    : std::runtime_error("batch " + std::to_string(batch) + ": " + what), batch_(batch)
{
}

StabilityReport pairwise_harness(const std::vector<Dataset>& batches, const Pipeline& pipeline, std::uint64_t seed,
                                 int threads)
{
    const int v = static_cast<int>(batches.size());
    if (v < 2) {
        throw InvalidArgument("the stability harness needs at least two batches");
    }
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::optional<BatchOutcome>> outcomes(static_cast<std::size_t>(v));
    std::vector<std::string> errors(static_cast<std::size_t>(v));
    for_each_index(v, threads, [&](int b) {
        const auto i = static_cast<std::size_t>(b);
        try {
            outcomes[i] = run_pipeline(batches[i], pipeline, derive_seed(seed, kBatchStream, i));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (int b = 0; b < v; ++b) {
        if (!outcomes[static_cast<std::size_t>(b)]) throw HarnessError(b, errors[static_cast<std::size_t>(b)]);
    }

    StabilityReport report;
    report.method_id = pipeline.id();
    report.metric = pipeline.metric();
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < v; ++i)
        for (int j = i + 1; j < v; ++j) pairs.emplace_back(i, j);
    report.pairwise.resize(pairs.size());
    for_each_index(static_cast<int>(pairs.size()), threads, [&](int k) {
        const auto [i, j] = pairs[static_cast<std::size_t>(k)];
        report.pairwise[static_cast<std::size_t>(k)] = compare_outcomes(
            *outcomes[static_cast<std::size_t>(i)], *outcomes[static_cast<std::size_t>(j)], pipeline.kind);
    });
    report.summary = summarize(report.pairwise);

    for (int b = 0; b < v; ++b) {
        const auto& out = *outcomes[static_cast<std::size_t>(b)];
        const auto& batch = batches[static_cast<std::size_t>(b)];
        report.flagged_batches += out.flagged ? 1 : 0;
        if (pipeline.kind == PipelineKind::clustering) {
            report.selected_k.push_back(out.partition->cluster_count());
            if (batch.true_partition) report.truth_ari.push_back(adjusted_rand_index(*out.partition, *batch.true_partition));
        }
        if (out.network) {
            report.densities.push_back(out.network->density());
            if (batch.true_adjacency) report.truth_metrics.push_back(confusion_metrics(out.network->adjacency, *batch.true_adjacency));
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

StabilityReport merge_reports(const std::vector<StabilityReport>& reports)
{
    if (reports.empty()) {
        throw InvalidArgument("no reports to merge");
    }
    StabilityReport out;
    out.method_id = reports.front().method_id;
    out.metric = reports.front().metric;
    for (const auto& r : reports) {
        if (r.method_id != out.method_id || r.metric != out.metric) {
            throw InvalidArgument("cannot merge reports of '" + out.method_id + "' and '" + r.method_id + "'");
        }
        out.pairwise.insert(out.pairwise.end(), r.pairwise.begin(), r.pairwise.end());
        out.densities.insert(out.densities.end(), r.densities.begin(), r.densities.end());
        out.selected_k.insert(out.selected_k.end(), r.selected_k.begin(), r.selected_k.end());
        out.truth_metrics.insert(out.truth_metrics.end(), r.truth_metrics.begin(), r.truth_metrics.end());
        out.truth_ari.insert(out.truth_ari.end(), r.truth_ari.begin(), r.truth_ari.end());
        out.flagged_batches += r.flagged_batches;
        out.wall_seconds += r.wall_seconds;
    }
    out.summary = summarize(out.pairwise);
    return out;
}

} // namespace stabglasso
