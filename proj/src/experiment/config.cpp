#include "imet/experiment/config.hpp"

#include "imet/common/error.hpp"

#include <cstdint>

#include <string>

namespace imet::experiment {

std::string_view to_string(Technique technique) noexcept {
    switch (technique) {
    case Technique::equal: return "equal";
    case Technique::weighted: return "weighted";
    case Technique::imet: return "imet";
    case Technique::baseline: return "baseline";
    }
    return "unknown";
}

Technique technique_from_string(std::string_view name) {
    for (auto t : {Technique::equal, Technique::weighted, Technique::imet, Technique::baseline}) {
        if (to_string(t) == name) return t;
    }
    fail(ErrorKind::invalid_config, "unknown technique '" + std::string(name) + "'");
}

std::string_view display_name(Technique technique) noexcept {
    switch (technique) {
    case Technique::equal: return "Equal Class Sampling";
    case Technique::weighted: return "Weighted Sampling";
    case Technique::imet: return "IMET";
    case Technique::baseline: return "Baseline CNN";
    }
    return "unknown";
}

int RunConfig::training_rounds() const noexcept {
    switch (technique) {
    case Technique::equal: return train.n_rep;
    case Technique::weighted:
    case Technique::imet: return train.n_rep + 1;
    case Technique::baseline: return 1;
    }
    return 0;
}

void RunConfig::validate() const {
    if (technique != Technique::baseline && train.n_rep < 1)
        fail(ErrorKind::invalid_config, "n_rep must be at least 1");
    train.validate(training_rounds());
    if (m && *m == 0) fail(ErrorKind::invalid_config, "m must be positive");
    if (budget && *budget == 0) fail(ErrorKind::invalid_config, "budget must be positive");
    if (dense_units.empty()) fail(ErrorKind::invalid_config, "dense_units must not be empty");
    for (auto u : dense_units) {
        if (u == 0) fail(ErrorKind::invalid_config, "dense layer widths must be positive");
    }
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["technique"] = std::string(to_string(technique));
    j["dataset"] = dataset_path.generic_string();
    j["seed"] = train.seed;
    j["epochs"] = train.epochs_total;
    j["n_rep"] = train.n_rep;
    j["batch_size"] = train.batch_size;
    j["lr"] = train.learning_rate;
    j["weight_decay"] = train.weight_decay;
    j["k"] = train.initial_per_class_k == 0 ? nlohmann::json(nullptr) : nlohmann::json(train.initial_per_class_k);
    j["m"] = m ? nlohmann::json(*m) : nlohmann::json(nullptr);
    j["budget"] = budget ? nlohmann::json(*budget) : nlohmann::json(nullptr);
    j["dense_units"] = dense_units;
    return j;
}

namespace {

template <typename T>
T read_field(const nlohmann::json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::invalid_config, "config field '" + key + "' has the wrong type");
    }
}

std::size_t read_count(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        fail(ErrorKind::invalid_config, "config field '" + key + "' must be a non-negative integer");
    }
    return value.get<std::size_t>();
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, RunConfig base) {
    if (!j.is_object()) fail(ErrorKind::invalid_config, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "technique") {
            base.technique = technique_from_string(read_field<std::string>(value, key));
        } else if (key == "dataset") {
            base.dataset_path = read_field<std::string>(value, key);
        } else if (key == "out") {
            base.output_dir = read_field<std::string>(value, key);
        } else if (key == "seed") {
            base.train.seed = read_count(value, key);
        } else if (key == "epochs") {
            base.train.epochs_total = read_field<int>(value, key);
        } else if (key == "n_rep") {
            base.train.n_rep = read_field<int>(value, key);
        } else if (key == "batch_size") {
            base.train.batch_size = read_count(value, key);
        } else if (key == "lr") {
            base.train.learning_rate = read_field<double>(value, key);
        } else if (key == "weight_decay") {
            base.train.weight_decay = read_field<double>(value, key);
        } else if (key == "k") {
            base.train.initial_per_class_k = value.is_null() ? 0 : read_count(value, key);
        } else if (key == "m") {
            if (value.is_null()) base.m.reset();
            else base.m = read_count(value, key);
        } else if (key == "budget") {
            if (value.is_null()) base.budget.reset();
            else base.budget = read_count(value, key);
        } else if (key == "dense_units") {
            base.dense_units = read_field<std::vector<std::size_t>>(value, key);
        } else {
            fail(ErrorKind::invalid_config, "unknown config field '" + key + "'");
        }
    }
    return base;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }

} // namespace imet::experiment
