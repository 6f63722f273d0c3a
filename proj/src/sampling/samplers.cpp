#include "imet/sampling/samplers.hpp"

#include "imet/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imet::sampling {

std::size_t ClassIndex::total() const noexcept {
    std::size_t sum = 0;
    for (const auto& c : per_class) {
        sum += c.size();
    }
    return sum;
}

std::size_t ClassIndex::min_class_size() const noexcept {
    std::size_t smallest = per_class.empty() ? 0 : per_class.front().size();
    for (const auto& c : per_class) {
        smallest = std::min(smallest, c.size());
    }
    return smallest;
}

std::string_view to_string(Provenance provenance) noexcept {
    switch (provenance) {
    case Provenance::initial: return "initial";
    case Provenance::equal_part: return "equal";
    case Provenance::weighted_part: return "weighted";
    }
    return "unknown";
}

void SampleBatch::append(const SampleBatch& other) {
    indices.insert(indices.end(), other.indices.begin(), other.indices.end());
    provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
}

std::size_t SampleBatch::count(Provenance which) const noexcept {
    return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), which));
}

ClassIndex partition_by_class(std::span<const int> labels, std::size_t n_classes) {
    ClassIndex index;
    index.n_classes = n_classes;
    index.per_class.resize(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
            fail(ErrorKind::invalid_label, "label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                               " outside [0, " + std::to_string(n_classes) + ")");
        }
        index.per_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t k = 0; k < n_classes; ++k) {
        if (index.per_class[k].empty()) {
            fail(ErrorKind::degenerate_class, "class " + std::to_string(k) + " has no samples");
        }
    }
    return index;
}

SampleBatch equal_sample(const ClassIndex& index, std::size_t m, RngStream& rng, Provenance provenance) {
    for (std::size_t k = 0; k < index.n_classes; ++k) {
        if (m > index.per_class[k].size()) {
            fail(ErrorKind::insufficient_class_data, "cannot draw " + std::to_string(m) + " samples from class " +
                                                         std::to_string(k) + " of size " +
                                                         std::to_string(index.per_class[k].size()));
        }
    }
    SampleBatch batch;
    batch.indices.reserve(m * index.n_classes);
    for (std::size_t k = 0; k < index.n_classes; ++k) {
        const auto drawn = rng.sample_without_replacement(std::span<const std::size_t>(index.per_class[k]), m);
        batch.indices.insert(batch.indices.end(), drawn.begin(), drawn.end());
    }
    batch.provenance.assign(batch.indices.size(), provenance);
    return batch;
}

std::vector<double> misclassification_weights(std::span<const std::size_t> counts) {
    const std::size_t n = counts.size();
    if (n == 0) {
        return {};
    }
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    std::vector<double> weights(n);
    for (std::size_t k = 0; k < n; ++k) {
        weights[k] = total == 0.0 ? 100.0 / static_cast<double>(n) : 100.0 * static_cast<double>(counts[k]) / total;
    }
    return weights;
}

std::vector<std::size_t> apportion_quotas(std::span<const double> weights, std::size_t budget) {
    const std::size_t n = weights.size();
    if (n == 0) {
        fail(ErrorKind::invalid_input, "cannot apportion over zero classes");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            fail(ErrorKind::invalid_input, "class weights must be finite and non-negative");
        }
        sum += w;
    }
    std::vector<std::size_t> quotas(n, 0);
    if (sum == 0.0) {
        // Degenerate: nothing to be proportional to; spread uniformly.
        std::vector<double> uniform(n, 1.0);
        return apportion_quotas(uniform, budget);
    }
    std::vector<double> remainder(n);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double share = weights[k] * static_cast<double>(budget) / sum;
        quotas[k] = static_cast<std::size_t>(std::floor(share));
        remainder[k] = share - std::floor(share);
        assigned += quotas[k];
    }
    // Floating rounding can overshoot by one in pathological cases; trim the smallest remainders.
    while (assigned > budget) {
        std::size_t worst = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (quotas[k] > 0 && (worst == n || remainder[k] < remainder[worst])) {
                worst = k;
            }
        }
        --quotas[worst];
        remainder[worst] += 1.0;
        --assigned;
    }
    // Remainders that tie exactly in real arithmetic can differ in the last
    // bits here; compare them on a 1e-9 grid so such ties go to the lower index.
    std::vector<long long> key(n);
    for (std::size_t k = 0; k < n; ++k) {
        key[k] = std::llround(remainder[k] * 1e9);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    for (std::size_t i = 0; assigned < budget; i = (i + 1) % n) {
        ++quotas[order[i]];
        ++assigned;
    }
    return quotas;
}

MisclassificationReport misclassification_report(std::span<const std::size_t> eval_indices,
                                                 std::span<const int> true_labels, std::span<const int> predicted,
                                                 std::size_t n_classes) {
    if (eval_indices.empty()) {
        fail(ErrorKind::invalid_input, "misclassification report needs at least one evaluated sample");
    }
    if (predicted.size() != eval_indices.size()) {
        fail(ErrorKind::invalid_input, "prediction count does not match evaluated indices");
    }
    MisclassificationReport report;
    report.per_class_misclassified.resize(n_classes);
    report.evaluated_per_class.assign(n_classes, 0);
    for (std::size_t i = 0; i < eval_indices.size(); ++i) {
        const std::size_t idx = eval_indices[i];
        if (idx >= true_labels.size()) {
            fail(ErrorKind::invalid_input, "evaluated index " + std::to_string(idx) + " out of range");
        }
        const int truth = true_labels[idx];
        if (truth < 0 || static_cast<std::size_t>(truth) >= n_classes || predicted[i] < 0 ||
            static_cast<std::size_t>(predicted[i]) >= n_classes) {
            fail(ErrorKind::invalid_label, "label outside [0, " + std::to_string(n_classes) + ")");
        }
        ++report.evaluated_per_class[static_cast<std::size_t>(truth)];
        if (predicted[i] != truth) {
            report.per_class_misclassified[static_cast<std::size_t>(truth)].push_back(idx);
        }
    }
    report.counts.resize(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        report.counts[k] = report.per_class_misclassified[k].size();
    }
    report.uniform_fallback = std::all_of(report.counts.begin(), report.counts.end(), [](auto c) { return c == 0; });
    report.weights_percent = misclassification_weights(report.counts);
    return report;
}

MisclassificationReport evaluate_misclassifications(const model::CnnModel& model,
                                                    std::span<const std::size_t> eval_indices,
                                                    const data::ImageDataset& dataset) {
    if (eval_indices.empty()) {
        fail(ErrorKind::invalid_input, "misclassification report needs at least one evaluated sample");
    }
    if (model.n_classes() != dataset.n_classes()) {
        fail(ErrorKind::invalid_config, "model head covers " + std::to_string(model.n_classes()) +
                                            " classes, dataset " + std::to_string(dataset.n_classes()));
    }
    const auto prediction = model::predict(model, dataset, eval_indices);
    return misclassification_report(eval_indices, dataset.labels(), prediction.labels, dataset.n_classes());
}

namespace {

/// Draws `quota` indices: the misclassified pool first, then the rest of the
/// class, then repeated fresh passes over the whole class.
void draw_class_quota(const std::vector<std::size_t>& class_members, const std::vector<std::size_t>& pool,
                      std::size_t quota, RngStream& rng, std::vector<std::size_t>& out) {
    const auto from_pool = rng.sample_without_replacement(std::span<const std::size_t>(pool), quota);
    out.insert(out.end(), from_pool.begin(), from_pool.end());
    std::size_t remaining = quota - from_pool.size();
    if (remaining == 0) {
        return;
    }
    std::vector<std::size_t> sorted_pool = pool;
    std::sort(sorted_pool.begin(), sorted_pool.end());
    std::vector<std::size_t> rest;
    rest.reserve(class_members.size());
    for (auto idx : class_members) {
        if (!std::binary_search(sorted_pool.begin(), sorted_pool.end(), idx)) {
            rest.push_back(idx);
        }
    }
    const auto top_up = rng.sample_without_replacement(std::span<const std::size_t>(rest), remaining);
    out.insert(out.end(), top_up.begin(), top_up.end());
    remaining -= top_up.size();
    while (remaining > 0) {
        const auto pass = rng.sample_without_replacement(std::span<const std::size_t>(class_members), remaining);
        out.insert(out.end(), pass.begin(), pass.end());
        remaining -= pass.size();
    }
}

} // namespace

SampleBatch weighted_sample(const ClassIndex& index, const MisclassificationReport& report, std::size_t budget,
                            RngStream& rng) {
    const std::size_t n = index.n_classes;
    if (budget < n) {
        fail(ErrorKind::invalid_config, "weighted budget " + std::to_string(budget) + " is below the class count " +
                                            std::to_string(n));
    }
    if (budget > index.total()) {
        fail(ErrorKind::insufficient_data, "weighted budget " + std::to_string(budget) + " exceeds the " +
                                               std::to_string(index.total()) + " training samples");
    }
    if (report.weights_percent.size() != n || report.per_class_misclassified.size() != n) {
        fail(ErrorKind::invalid_input, "misclassification report does not cover " + std::to_string(n) + " classes");
    }
    const auto quotas = apportion_quotas(report.weights_percent, budget);
    SampleBatch batch;
    batch.indices.reserve(budget);
    for (std::size_t k = 0; k < n; ++k) {
        draw_class_quota(index.per_class[k], report.per_class_misclassified[k], quotas[k], rng, batch.indices);
    }
    batch.provenance.assign(batch.indices.size(), Provenance::weighted_part);
    return batch;
}

std::size_t imet_equal_per_class(std::size_t budget, std::size_t n_classes) noexcept {
    return n_classes == 0 ? 0 : ((budget + 1) / 2) / n_classes;
}

std::size_t imet_weighted_budget(std::size_t budget) noexcept { return budget / 2; }

SampleBatch imet_sample(const ClassIndex& index, const MisclassificationReport& report, std::size_t budget,
                        RngStream& rng) {
    const std::size_t n = index.n_classes;
    if (budget < 2 * n) {
        fail(ErrorKind::invalid_config, "IMET budget " + std::to_string(budget) + " is below twice the class count");
    }
    SampleBatch batch = equal_sample(index, imet_equal_per_class(budget, n), rng, Provenance::equal_part);
    batch.append(weighted_sample(index, report, imet_weighted_budget(budget), rng));
    return batch;
}

EvalSubset build_eval_subset(const ClassIndex& index, RngStream& rng) {
    EvalSubset subset;
    subset.per_class_m = index.min_class_size();
    if (subset.per_class_m == 0) {
        fail(ErrorKind::degenerate_class, "evaluation subset needs every class to be non-empty");
    }
    subset.indices = equal_sample(index, subset.per_class_m, rng).indices;
    return subset;
}

std::vector<ClassComposition> batch_composition(const SampleBatch& batch, std::span<const int> labels,
                                                std::size_t n_classes) {
    std::vector<ClassComposition> out(n_classes);
    for (std::size_t i = 0; i < batch.indices.size(); ++i) {
        const auto k = static_cast<std::size_t>(labels[batch.indices[i]]);
        switch (batch.provenance[i]) {
        case Provenance::initial: ++out.at(k).initial; break;
        case Provenance::equal_part: ++out.at(k).equal; break;
        case Provenance::weighted_part: ++out.at(k).weighted; break;
        }
    }
    return out;
}

} // namespace imet::sampling
