// End-to-end runs on the real MedMNIST archives. The archive paths come from
// IMET_PNEUMONIA_NPZ and IMET_OCT_NPZ; without them the check exits 77 (skipped).

#include "imet/experiment/config.hpp"
#include "imet/experiment/report.hpp"
#include "imet/experiment/runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

using namespace imet;
using namespace imet::experiment;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

// Pinned thresholds.
constexpr double kPneumoniaMedianAccuracy = 0.85;
constexpr double kOctAccuracy = 0.75;
constexpr double kOctMicroAuc = 0.92;
constexpr std::uint64_t kPneumoniaSeeds[] = {0, 1, 2};
constexpr std::uint64_t kOctSeed = 0;

std::optional<fs::path> archive_from_env(const char* var) {
    const char* value = std::getenv(var);
    if (!value || !*value) return std::nullopt;
    return fs::path(value);
}

RunReport run_one(Technique technique, const fs::path& archive, std::uint64_t seed, const fs::path& out,
                  std::optional<int> epochs) {
    RunConfig c;
    c.technique = technique;
    c.dataset_path = archive;
    c.output_dir = out;
    c.train.seed = seed;
    if (epochs) c.train.epochs_total = *epochs;
    auto run = run_from_config(c, [&](const RoundRecord& r, int total) {
        std::fprintf(stderr, "  %s seed %llu round %d of %d (%s) loss %.4f\n", std::string(to_string(technique)).c_str(),
                     static_cast<unsigned long long>(seed), r.round, total, r.kind.c_str(),
                     r.loss_trace.empty() ? 0.0 : r.loss_trace.back());
    });
    emit_report(run.report, &run.model, out);
    std::printf("  %-8s seed %llu: accuracy %.4f, AUC %.4f, %zu samples, %.0fs\n",
                std::string(to_string(technique)).c_str(), static_cast<unsigned long long>(seed),
                run.report.test_metrics.scalars.accuracy, run.report.test_metrics.headline_auc(),
                run.report.samples_with_duplicates, run.report.wall_clock_seconds);
    std::fflush(stdout);
    return run.report;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int pneumonia(const fs::path& work, std::optional<int> epochs) {
    const auto archive = archive_from_env("IMET_PNEUMONIA_NPZ");
    if (!archive || !fs::exists(*archive)) {
        std::printf("SKIP  criterion 2  end-to-end PneumoniaMNIST: set IMET_PNEUMONIA_NPZ to pneumoniamnist.npz\n");
        return kSkip;
    }
    std::vector<double> imet, equal;
    for (auto seed : kPneumoniaSeeds) {
        const auto tag = "seed" + std::to_string(seed);
        imet.push_back(run_one(Technique::imet, *archive, seed, work / ("imet_" + tag), epochs).test_metrics.scalars.accuracy);
        equal.push_back(
            run_one(Technique::equal, *archive, seed, work / ("equal_" + tag), epochs).test_metrics.scalars.accuracy);
    }
    const double mi = median(imet), me = median(equal);
    const bool pass = mi >= kPneumoniaMedianAccuracy && mi >= me;
    std::printf("%s  criterion 2  end-to-end PneumoniaMNIST: median IMET accuracy %.4f (need >= %.2f), median equal "
                "%.4f (IMET must be >= equal)\n",
                pass ? "PASS" : "FAIL", mi, kPneumoniaMedianAccuracy, me);
    return pass ? 0 : 1;
}

int oct(const fs::path& work, std::optional<int> epochs) {
    const auto archive = archive_from_env("IMET_OCT_NPZ");
    if (!archive || !fs::exists(*archive)) {
        std::printf("SKIP  criterion 3  extended OCTMNIST: set IMET_OCT_NPZ to octmnist.npz\n");
        return kSkip;
    }
    const auto r = run_one(Technique::imet, *archive, kOctSeed, work / "imet_seed0", epochs);
    const double acc = r.test_metrics.scalars.accuracy;
    const double auc = r.test_metrics.roc.micro.auc;
    const bool pass = acc >= kOctAccuracy && auc >= kOctMicroAuc;
    std::printf("%s  criterion 3  extended OCTMNIST: IMET accuracy %.4f (need >= %.2f), micro AUC %.4f (need >= %.2f)\n",
                pass ? "PASS" : "FAIL", acc, kOctAccuracy, auc, kOctMicroAuc);
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"end-to-end acceptance runs"};
    std::string which, work;
    std::optional<int> epochs;
    app.add_option("dataset", which, "pneumonia or oct")->required()->check(CLI::IsMember({"pneumonia", "oct"}));
    app.add_option("--work", work, "output directory for the run reports")->required();
    app.add_option("--epochs", epochs, "override the total epochs (smoke runs only; the criterion uses the default)");
    CLI11_PARSE(app, argc, argv);
    try {
        fs::create_directories(work);
        return which == "pneumonia" ? pneumonia(work, epochs) : oct(work, epochs);
    } catch (const std::exception& e) {
        std::printf("FAIL  %s run aborted: %s\n", which.c_str(), e.what());
        return 1;
    }
}
