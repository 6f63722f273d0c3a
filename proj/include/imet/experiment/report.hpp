#pragma once

#include "imet/experiment/runner.hpp"
#include "imet/metrics/metrics.hpp"
#include "imet/model/cnn.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace imet::experiment {

nlohmann::json to_json(const RunReport& report);

/// Header plus one row: Model,Parameters,Samples,Accuracy,AUC,Precision,Recall,F1.
std::string metrics_csv(const RunReport& report);

/// round,class,equal_count,weighted_count,quota
std::string composition_csv(const RunReport& report);

/// Writes report.json, metrics.csv, composition.csv, roc_<scope>.csv for
/// every defined test curve and, when given, model.json + model.bin. Every
/// file is replaced atomically; the directory is created on demand.
void emit_report(const RunReport& report, const model::CnnModel* model, const std::filesystem::path& output_dir);

/// Writes the ROC CSVs of `metrics` into `output_dir`.
void write_roc_files(const metrics::MetricsReport& metrics, const std::filesystem::path& output_dir);

} // namespace imet::experiment
