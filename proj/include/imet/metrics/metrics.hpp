#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imet::metrics {

/// Rows are the actual class, columns the predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    std::size_t n_classes() const noexcept { return n_; }
    std::size_t& at(std::size_t actual, std::size_t predicted) { return counts_.at(actual * n_ + predicted); }
    std::size_t at(std::size_t actual, std::size_t predicted) const { return counts_.at(actual * n_ + predicted); }
    std::size_t total() const noexcept;
    std::size_t trace() const noexcept;
    std::size_t row_sum(std::size_t actual) const;
    std::size_t column_sum(std::size_t predicted) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t n_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

/// One-vs-rest counts and scores for one class. A metric whose denominator
/// is zero is reported as 0 and flagged.
struct ClassMetrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct Averages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ScalarMetrics {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    Averages weighted; // support-weighted over classes
    Averages macro;    // unweighted mean over classes
    bool zero_denominator = false;
};

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm);

enum class RocScope { per_class, micro, macro };

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    RocScope scope = RocScope::per_class;
    std::size_t class_index = 0;
    bool defined = true;
    std::vector<RocPoint> points;
    /// Trapezoidal area for per-class and micro curves; the mean of the
    /// per-class areas for the macro curve.
    double auc = 0.0;
    /// Trapezoidal area of the stored points (differs from `auc` only for macro).
    double curve_auc = 0.0;

    std::string label() const;
};

double trapezoid_area(std::span<const RocPoint> points) noexcept;

/// Binary ROC over descending unique score thresholds plus a sentinel above
/// the maximum; tied scores move together in one step. `labels` are 1 for
/// positive and 0 for negative samples. Throws undefined-curve unless both
/// are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

struct MulticlassRoc {
    std::vector<RocCurve> per_class;
    RocCurve micro;
    RocCurve macro;
    std::vector<std::string> warnings;
};

/// One-vs-rest curves per class, the micro curve over all pooled
/// (sample, class) pairs, and the macro curve: per-class TPR averaged
/// vertically on the union FPR grid with linear interpolation.
MulticlassRoc multiclass_roc(const std::vector<std::vector<double>>& scores, std::span<const int> labels,
                             std::size_t n_classes);

struct MetricsReport {
    ConfusionMatrix confusion;
    ScalarMetrics scalars;
    MulticlassRoc roc;

    /// Binary problems: the positive-class (label 1) AUC. Otherwise: micro AUC.
    double headline_auc() const;
};

MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       const std::vector<std::vector<double>>& scores, std::size_t n_classes);

nlohmann::json to_json(const MetricsReport& report);

/// "scope,fpr,tpr" rows for one curve.
std::string roc_csv(const RocCurve& curve);

} // namespace imet::metrics
