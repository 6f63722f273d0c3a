// imet: train, evaluate and inspect from the command line.

#include "imet/common/atomic_file.hpp"
#include "imet/common/error.hpp"
#include "imet/data/dataset.hpp"
#include "imet/experiment/config.hpp"
#include "imet/experiment/report.hpp"
#include "imet/experiment/runner.hpp"
#include "imet/metrics/metrics.hpp"
#include "imet/model/cnn.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace imet;

void print_error(std::string_view kind, const std::string& message) {
    nlohmann::json line{{"error", std::string(kind)}, {"message", message}};
    std::cerr << line.dump() << '\n';
}

struct TrainOptions {
    std::optional<std::string> technique;
    std::optional<std::string> dataset;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> epochs;
    std::optional<int> n_rep;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> k;
    std::optional<std::size_t> m;
    std::optional<double> lr;
    std::optional<double> weight_decay;
    std::optional<std::size_t> batch_size;
    bool quiet = false;
};

int run_train(const TrainOptions& o) {
    experiment::RunConfig config;
    if (o.config) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(*o.config));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::invalid_config, "cannot parse " + *o.config + ": " + e.what());
        }
        config = experiment::RunConfig::from_json(j);
    }
    if (o.technique) config.technique = experiment::technique_from_string(*o.technique);
    if (o.dataset) config.dataset_path = *o.dataset;
    if (o.out) config.output_dir = *o.out;
    if (o.seed) config.train.seed = *o.seed;
    if (o.epochs) config.train.epochs_total = *o.epochs;
    if (o.n_rep) config.train.n_rep = *o.n_rep;
    if (o.budget) config.budget = *o.budget;
    if (o.k) config.train.initial_per_class_k = *o.k;
    if (o.m) config.m = *o.m;
    if (o.lr) config.train.learning_rate = *o.lr;
    if (o.weight_decay) config.train.weight_decay = *o.weight_decay;
    if (o.batch_size) config.train.batch_size = *o.batch_size;
    if (config.dataset_path.empty()) fail(ErrorKind::invalid_config, "no dataset given (--dataset or config 'dataset')");
    if (config.output_dir.empty()) fail(ErrorKind::invalid_config, "no output directory given (--out or config 'out')");

    experiment::RoundObserver observer;
    if (!o.quiet) {
        observer = [](const experiment::RoundRecord& r, int total) {
            const double last = r.loss_trace.empty() ? 0.0 : r.loss_trace.back();
            // weighted and IMET number their initial round 0
            const bool zero_based = r.kind != "equal" && r.kind != "baseline";
            std::fprintf(stderr, "[%d/%d] %s: %zu samples, %d epochs, loss %.4f\n", r.round + (zero_based ? 1 : 0),
                         total, r.kind.c_str(), r.batch.size(), r.epochs, last);
        };
    }
    auto run = experiment::run_from_config(config, observer);
    experiment::emit_report(run.report, &run.model, config.output_dir);
    std::cout << experiment::metrics_csv(run.report);
    return 0;
}

int run_evaluate(const std::string& checkpoint, const std::string& dataset, const std::string& out,
                 const std::string& split_name) {
    const auto model = model::CnnModel::load(checkpoint);
    const auto split = data::normalize(data::load_dataset(dataset, data::split_from_string(split_name)));
    if (split.n_classes() != model.n_classes()) {
        fail(ErrorKind::invalid_input, "checkpoint has " + std::to_string(model.n_classes()) + " classes, dataset has " +
                                           std::to_string(split.n_classes()));
    }
    const auto prediction = model::predict(model, split);
    const auto report = metrics::evaluate(split.labels(), prediction.labels, prediction.scores, split.n_classes());
    auto j = metrics::to_json(report);
    j["split"] = split_name;
    j["parameters"] = model.parameter_count();
    write_file_atomic(std::filesystem::path(out) / "evaluation.json", j.dump(2) + '\n');
    experiment::write_roc_files(report, out);
    std::printf("split=%s accuracy=%.6f auc=%.6f\n", split_name.c_str(), report.scalars.accuracy, report.headline_auc());
    return 0;
}

int run_inspect(const std::string& dataset) {
    const auto splits = data::load_splits(dataset);
    std::cout << "split,class,count\n";
    for (const auto* s : {&splits.train, &splits.val, &splits.test}) {
        const auto csv = data::histogram_csv(*s);
        std::cout << csv.substr(csv.find('\n') + 1);
    }
    std::fprintf(stderr, "images %zux%zux%zu, %zu classes\n", splits.train.height(), splits.train.width(),
                 splits.train.channels(), splits.train.n_classes());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMET sampling experiments"};
    app.require_subcommand(1);

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "run one technique and write its reports");
    train_cmd->add_option("--technique", train.technique, "equal, weighted, imet or baseline");
    train_cmd->add_option("--dataset", train.dataset, "MedMNIST-style .npz archive");
    train_cmd->add_option("--config", train.config, "flat JSON run config; flags override it");
    train_cmd->add_option("--seed", train.seed);
    train_cmd->add_option("--out", train.out, "output directory");
    train_cmd->add_option("--epochs", train.epochs, "total epochs across all rounds");
    train_cmd->add_option("--n-rep", train.n_rep, "sampling rounds");
    train_cmd->add_option("--budget", train.budget, "weighted / IMET round size");
    train_cmd->add_option("--k", train.k, "initial per-class sample size");
    train_cmd->add_option("--m", train.m, "equal sampling per-class size");
    train_cmd->add_option("--lr", train.lr);
    train_cmd->add_option("--weight-decay", train.weight_decay);
    train_cmd->add_option("--batch-size", train.batch_size);
    train_cmd->add_flag("--quiet", train.quiet, "no per-round progress on stderr");

    std::string checkpoint, eval_dataset, eval_out, eval_split = "test";
    auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on one split");
    eval_cmd->add_option("--checkpoint", checkpoint, "model.json written by train")->required();
    eval_cmd->add_option("--dataset", eval_dataset)->required();
    eval_cmd->add_option("--out", eval_out)->required();
    eval_cmd->add_option("--split", eval_split)->check(CLI::IsMember({"train", "val", "test"}));

    std::string inspect_dataset;
    auto* inspect_cmd = app.add_subcommand("inspect-dataset", "print the class histogram of every split");
    inspect_cmd->add_option("--dataset", inspect_dataset)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*train_cmd) return run_train(train);
        if (*eval_cmd) return run_evaluate(checkpoint, eval_dataset, eval_out, eval_split);
        if (*inspect_cmd) return run_inspect(inspect_dataset);
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 1;
}
