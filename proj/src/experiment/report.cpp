#include "imet/experiment/report.hpp"

#include "imet/common/atomic_file.hpp"

#include <cstdio>
#include <string>

namespace imet::experiment {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

nlohmann::json round_json(const RoundRecord& r) {
    nlohmann::json j;
    j["round"] = r.round;
    j["kind"] = r.kind;
    j["epochs"] = r.epochs;
    j["batch_size"] = r.batch.size();
    j["batch_digest"] = hex64(r.batch_digest);
    j["provenance"] = {{"initial", r.batch.count(sampling::Provenance::initial)},
                       {"equal", r.batch.count(sampling::Provenance::equal_part)},
                       {"weighted", r.batch.count(sampling::Provenance::weighted_part)}};
    auto& comp = j["composition"] = nlohmann::json::array();
    for (std::size_t k = 0; k < r.composition.size(); ++k) {
        const auto& c = r.composition[k];
        comp.push_back({{"class", k}, {"initial", c.initial}, {"equal", c.equal}, {"weighted", c.weighted}});
    }
    j["weighted_quotas"] = r.weighted_quotas;
    if (r.misclassification) {
        const auto& m = *r.misclassification;
        j["misclassification"] = {{"counts", m.counts},
                                  {"evaluated_per_class", m.evaluated_per_class},
                                  {"weights_percent", m.weights_percent},
                                  {"uniform_fallback", m.uniform_fallback}};
    } else {
        j["misclassification"] = nullptr;
    }
    j["loss_trace"] = r.loss_trace;
    return j;
}

} // namespace

nlohmann::json to_json(const RunReport& report) {
    nlohmann::json j;
    j["config"] = report.config.to_json();
    j["model"] = std::string(display_name(report.config.technique));
    j["n_classes"] = report.n_classes;
    j["train_class_sizes"] = report.train_class_sizes;
    j["resolved"] = {{"per_class", report.resolved_per_class}, {"budget", report.resolved_budget}};
    j["eval_subset"] = {{"size", report.eval_subset.size()}, {"digest", hex64(batch_digest(report.eval_subset))}};
    j["parameters"] = report.parameters;
    auto& rounds = j["rounds"] = nlohmann::json::array();
    for (const auto& r : report.rounds) rounds.push_back(round_json(r));
    j["samples"] = {{"with_duplicates", report.samples_with_duplicates}, {"unique", report.samples_unique}};
    j["test_metrics"] = metrics::to_json(report.test_metrics);
    j["validation_metrics"] =
        report.validation_metrics ? metrics::to_json(*report.validation_metrics) : nlohmann::json(nullptr);
    j["wall_clock_seconds"] = report.wall_clock_seconds;
    return j;
}

std::string metrics_csv(const RunReport& report) {
    const auto& s = report.test_metrics.scalars;
    std::string out = "Model,Parameters,Samples,Accuracy,AUC,Precision,Recall,F1\n";
    out += std::string(display_name(report.config.technique)) + ',' + std::to_string(report.parameters) + ',' +
           std::to_string(report.samples_with_duplicates) + ',' + fixed(s.accuracy) + ',' +
           fixed(report.test_metrics.headline_auc()) + ',' + fixed(s.weighted.precision) + ',' +
           fixed(s.weighted.recall) + ',' + fixed(s.weighted.f1) + '\n';
    return out;
}

std::string composition_csv(const RunReport& report) {
    std::string out = "round,class,equal_count,weighted_count,quota\n";
    for (const auto& r : report.rounds) {
        for (std::size_t k = 0; k < r.composition.size(); ++k) {
            const auto& c = r.composition[k];
            const std::size_t quota = k < r.weighted_quotas.size() ? r.weighted_quotas[k] : 0;
            out += std::to_string(r.round) + ',' + std::to_string(k) + ',' + std::to_string(c.initial + c.equal) + ',' +
                   std::to_string(c.weighted) + ',' + std::to_string(quota) + '\n';
        }
    }
    return out;
}

void write_roc_files(const metrics::MetricsReport& metrics, const std::filesystem::path& output_dir) {
    auto write = [&](const metrics::RocCurve& curve) {
        if (!curve.defined) return;
        write_file_atomic(output_dir / ("roc_" + curve.label() + ".csv"), metrics::roc_csv(curve));
    };
    for (const auto& c : metrics.roc.per_class) write(c);
    write(metrics.roc.micro);
    write(metrics.roc.macro);
}

void emit_report(const RunReport& report, const model::CnnModel* model, const std::filesystem::path& output_dir) {
    write_file_atomic(output_dir / "report.json", to_json(report).dump(2) + '\n');
    write_file_atomic(output_dir / "metrics.csv", metrics_csv(report));
    write_file_atomic(output_dir / "composition.csv", composition_csv(report));
    write_roc_files(report.test_metrics, output_dir);
    if (model) model->save(output_dir / "model.json");
}

} // namespace imet::experiment
