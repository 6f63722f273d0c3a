#include "imet/experiment/runner.hpp"

#include "imet/common/error.hpp"

#include <chrono>
#include <string>
#include <unordered_set>
#include <utility>

namespace imet::experiment {

namespace {

// Stream tags under the run seed.
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kSamplingStream = 2;
constexpr std::uint64_t kTrainingStream = 3;

metrics::MetricsReport evaluate_split(Learner& learner, const data::ImageDataset& split) {
    const auto prediction = learner.predict_split(split);
    return metrics::evaluate(split.labels(), prediction.labels, prediction.scores, split.n_classes());
}

sampling::MisclassificationReport assess(Learner& learner, std::span<const std::size_t> eval_indices,
                                         const data::ImageDataset& train, std::size_t n_classes) {
    const auto predicted = learner.predict_train(eval_indices);
    return sampling::misclassification_report(eval_indices, train.labels(), predicted, n_classes);
}

} // namespace

std::vector<double> CnnLearner::train(const sampling::SampleBatch& batch, int epochs, RngStream& rng) {
    return model::train_epochs(model_, batch, train_, epochs, config_, rng);
}

std::vector<int> CnnLearner::predict_train(std::span<const std::size_t> train_indices) {
    return model::predict(model_, train_, train_indices).labels;
}

model::Prediction CnnLearner::predict_split(const data::ImageDataset& split) { return model::predict(model_, split); }

std::uint64_t batch_digest(std::span<const std::size_t> indices) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto idx : indices) {
        auto v = static_cast<std::uint64_t>(idx);
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

RunReport run_technique(const RunConfig& config, const data::DatasetSplits& data, Learner& learner,
                        const RoundObserver& observer) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    const auto& train = data.train;
    if (!train.normalized()) fail(ErrorKind::state, "training split must be normalized before a run");

    RunReport report;
    report.config = config;
    report.n_classes = train.n_classes();
    report.parameters = learner.parameter_count();

    const auto index = sampling::partition_by_class(train.labels(), train.n_classes());
    for (const auto& members : index.per_class) report.train_class_sizes.push_back(members.size());
    const std::size_t min_class = index.min_class_size();
    const std::size_t n = index.n_classes;

    switch (config.technique) {
    case Technique::equal: report.resolved_per_class = config.m.value_or(min_class); break;
    case Technique::weighted:
    case Technique::imet:
        report.resolved_per_class = config.train.initial_per_class_k == 0 ? min_class : config.train.initial_per_class_k;
        report.resolved_budget = config.budget.value_or(n * min_class);
        break;
    case Technique::baseline: break;
    }

    const RngStream root(config.train.seed);
    RngStream sampling_rng = root.derive(kSamplingStream);
    RngStream training_rng = root.derive(kTrainingStream);

    const int total_rounds = config.training_rounds();
    const auto epochs = model::split_epochs(config.train.epochs_total, total_rounds);
    std::unordered_set<std::size_t> seen;

    auto run_round = [&](int round, std::string kind, sampling::SampleBatch batch,
                         std::optional<sampling::MisclassificationReport> assessment,
                         std::vector<std::size_t> quotas) {
        RoundRecord record;
        record.round = round;
        record.kind = std::move(kind);
        record.epochs = epochs.at(report.rounds.size());
        record.composition = sampling::batch_composition(batch, train.labels(), n);
        record.weighted_quotas = std::move(quotas);
        record.misclassification = std::move(assessment);
        record.loss_trace = learner.train(batch, record.epochs, training_rng);
        record.batch_digest = batch_digest(batch.indices);
        report.samples_with_duplicates += batch.size();
        seen.insert(batch.indices.begin(), batch.indices.end());
        record.batch = std::move(batch);
        report.rounds.push_back(std::move(record));
        if (observer) observer(report.rounds.back(), total_rounds);
    };

    switch (config.technique) {
    case Technique::baseline: {
        sampling::SampleBatch batch;
        batch.indices.resize(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) batch.indices[i] = i;
        batch.provenance.assign(train.size(), sampling::Provenance::initial);
        run_round(1, "baseline", std::move(batch), std::nullopt, {});
        break;
    }
    case Technique::equal:
        for (int r = 1; r <= config.train.n_rep; ++r) {
            run_round(r, "equal", sampling::equal_sample(index, report.resolved_per_class, sampling_rng), std::nullopt,
                      {});
        }
        break;
    case Technique::weighted:
    case Technique::imet: {
        const bool imet = config.technique == Technique::imet;
        std::vector<std::size_t> all_indices;
        if (imet) {
            report.eval_subset = sampling::build_eval_subset(index, sampling_rng).indices;
        } else {
            all_indices.resize(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) all_indices[i] = i;
        }
        const auto& eval_indices = imet ? report.eval_subset : all_indices;

        run_round(0, "initial",
                  sampling::equal_sample(index, report.resolved_per_class, sampling_rng, sampling::Provenance::initial),
                  std::nullopt, {});
        for (int r = 1; r <= config.train.n_rep; ++r) {
            auto assessment = assess(learner, eval_indices, train, n);
            const std::size_t weighted_budget =
                imet ? sampling::imet_weighted_budget(report.resolved_budget) : report.resolved_budget;
            auto quotas = sampling::apportion_quotas(assessment.weights_percent, weighted_budget);
            auto batch = imet ? sampling::imet_sample(index, assessment, report.resolved_budget, sampling_rng)
                              : sampling::weighted_sample(index, assessment, report.resolved_budget, sampling_rng);
            run_round(r, imet ? "imet" : "weighted", std::move(batch), std::move(assessment), std::move(quotas));
        }
        break;
    }
    }

    report.samples_unique = seen.size();
    report.test_metrics = evaluate_split(learner, data.test);
    if (data.val.size() > 0) report.validation_metrics = evaluate_split(learner, data.val);
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

RunReport run_equal(RunConfig config, const data::DatasetSplits& data, Learner& learner) {
    config.technique = Technique::equal;
    return run_technique(config, data, learner);
}

RunReport run_weighted(RunConfig config, const data::DatasetSplits& data, Learner& learner) {
    config.technique = Technique::weighted;
    return run_technique(config, data, learner);
}

RunReport run_imet(RunConfig config, const data::DatasetSplits& data, Learner& learner) {
    config.technique = Technique::imet;
    return run_technique(config, data, learner);
}

RunReport run_baseline(RunConfig config, const data::DatasetSplits& data, Learner& learner) {
    config.technique = Technique::baseline;
    return run_technique(config, data, learner);
}

CompletedRun run_from_config(const RunConfig& config, const RoundObserver& observer) {
    config.validate();
    auto raw = data::load_splits(config.dataset_path);
    data::DatasetSplits splits{data::normalize(raw.train), data::normalize(raw.val), data::normalize(raw.test)};
    const auto& train = splits.train;
    auto model = model::build_cnn(train.height(), train.width(), train.channels(), train.n_classes(),
                                  RngStream(config.train.seed).derive(kModelStream).seed(), config.dense_units);
    CnnLearner learner(model, train, config.train);
    auto report = run_technique(config, splits, learner, observer);
    return CompletedRun{std::move(report), std::move(model)};
}

} // namespace imet::experiment
