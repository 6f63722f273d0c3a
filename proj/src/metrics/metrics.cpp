#include "imet/metrics/metrics.hpp"

#include "imet/common/error.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace imet::metrics {

std::size_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const noexcept {
    std::size_t sum = 0;
    for (std::size_t k = 0; k < n_; ++k) {
        sum += counts_[k * n_ + k];
    }
    return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t actual) const {
    std::size_t sum = 0;
    for (std::size_t j = 0; j < n_; ++j) {
        sum += at(actual, j);
    }
    return sum;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        sum += at(i, predicted);
    }
    return sum;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) {
        fail(ErrorKind::invalid_input, "label arrays differ in length: " + std::to_string(y_true.size()) + " vs " +
                                           std::to_string(y_pred.size()));
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
            fail(ErrorKind::invalid_label, "label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                               ") outside [0, " + std::to_string(n_classes) + ")");
        }
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
    if (den == 0) {
        undefined = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (cm.n_classes() == 0 || total == 0) {
        fail(ErrorKind::invalid_input, "metrics need a non-empty confusion matrix");
    }
    ScalarMetrics out;
    const double t = static_cast<double>(total);
    out.accuracy = static_cast<double>(cm.trace()) / t;

    std::size_t tp_sum = 0;
    for (std::size_t k = 0; k < cm.n_classes(); ++k) {
        ClassMetrics c;
        c.tp = cm.at(k, k);
        c.support = cm.row_sum(k);
        c.fn = c.support - c.tp;
        c.fp = cm.column_sum(k) - c.tp;
        c.tn = total - c.tp - c.fn - c.fp;
        c.precision = ratio(c.tp, c.tp + c.fp, c.precision_undefined);
        c.recall = ratio(c.tp, c.tp + c.fn, c.recall_undefined);
        if (c.precision + c.recall > 0.0) {
            c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
        } else {
            c.f1_undefined = true;
        }
        out.zero_denominator = out.zero_denominator || c.precision_undefined || c.recall_undefined || c.f1_undefined;

        const double share = static_cast<double>(c.support) / t;
        out.weighted.precision += share * c.precision;
        out.weighted.f1 += share * c.f1;
        out.macro.precision += c.precision;
        out.macro.recall += c.recall;
        out.macro.f1 += c.f1;
        tp_sum += c.tp;
        out.per_class.push_back(c);
    }
    // support_k * recall_k == tp_k, so the support-weighted recall is sum(tp) / total.
    out.weighted.recall = static_cast<double>(tp_sum) / t;
    const double n = static_cast<double>(cm.n_classes());
    out.macro.precision /= n;
    out.macro.recall /= n;
    out.macro.f1 /= n;
    return out;
}

std::string RocCurve::label() const {
    switch (scope) {
    case RocScope::per_class: return "class" + std::to_string(class_index);
    case RocScope::micro: return "micro";
    case RocScope::macro: return "macro";
    }
    return "unknown";
}

double trapezoid_area(std::span<const RocPoint> points) noexcept {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
    }
    return area;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        fail(ErrorKind::invalid_input, "scores and labels differ in length");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) {
            fail(ErrorKind::invalid_label, "binary ROC labels must be 0 or 1, got " + std::to_string(l));
        }
    }
    const auto p_total = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t n_total = labels.size() - p_total;
    if (p_total == 0 || n_total == 0) {
        fail(ErrorKind::undefined_curve, "ROC needs at least one positive and one negative sample");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_total),
                                static_cast<double>(tp) / static_cast<double>(p_total)});
    }
    curve.auc = trapezoid_area(curve.points);
    curve.curve_auc = curve.auc;
    return curve;
}

namespace {

/// TPR of `curve` at `x`: the top of any vertical segment at x, else linear interpolation.
double tpr_at(const std::vector<RocPoint>& points, double x) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < points.size() && points[i].fpr <= x; ++i) {
        last = i;
    }
    if (points[last].fpr == x || last + 1 == points.size()) {
        return points[last].tpr;
    }
    const auto& a = points[last];
    const auto& b = points[last + 1];
    return a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr);
}

} // namespace

MulticlassRoc multiclass_roc(const std::vector<std::vector<double>>& scores, std::span<const int> labels,
                             std::size_t n_classes) {
    if (n_classes < 2) {
        fail(ErrorKind::invalid_input, "multiclass ROC needs at least two classes");
    }
    if (scores.size() != labels.size()) {
        fail(ErrorKind::invalid_input, "score rows and labels differ in length");
    }
    for (const auto& row : scores) {
        if (row.size() != n_classes) {
            fail(ErrorKind::invalid_input, "every score row needs " + std::to_string(n_classes) + " entries");
        }
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
            fail(ErrorKind::invalid_label, "label " + std::to_string(l) + " out of range");
        }
    }

    MulticlassRoc out;
    std::vector<double> column(scores.size());
    std::vector<int> indicator(scores.size());
    for (std::size_t k = 0; k < n_classes; ++k) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            column[i] = scores[i][k];
            indicator[i] = static_cast<std::size_t>(labels[i]) == k;
        }
        RocCurve curve;
        try {
            curve = roc_curve(column, indicator);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::undefined_curve) {
                throw;
            }
            curve.defined = false;
            out.warnings.push_back("class " + std::to_string(k) +
                                   ": ROC undefined (class absent or universal); excluded from macro average");
        }
        curve.scope = RocScope::per_class;
        curve.class_index = k;
        out.per_class.push_back(std::move(curve));
    }

    {
        const std::size_t pooled = scores.size() * n_classes;
        std::vector<double> pooled_scores;
        pooled_scores.reserve(pooled);
        std::vector<int> pooled_labels;
        pooled_labels.reserve(pooled);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            for (std::size_t k = 0; k < n_classes; ++k) {
                pooled_scores.push_back(scores[i][k]);
                pooled_labels.push_back(static_cast<std::size_t>(labels[i]) == k ? 1 : 0);
            }
        }
        out.micro = roc_curve(pooled_scores, pooled_labels);
        out.micro.scope = RocScope::micro;
    }

    std::vector<const RocCurve*> defined;
    for (const auto& c : out.per_class) {
        if (c.defined) {
            defined.push_back(&c);
        }
    }
    out.macro.scope = RocScope::macro;
    if (defined.empty()) {
        out.macro.defined = false;
        out.warnings.push_back("macro ROC undefined: no class has a defined curve");
        return out;
    }
    std::vector<double> grid;
    for (const auto* c : defined) {
        for (const auto& p : c->points) {
            grid.push_back(p.fpr);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    out.macro.points.push_back({0.0, 0.0});
    double auc_sum = 0.0;
    for (const auto* c : defined) {
        auc_sum += c->auc;
    }
    for (double x : grid) {
        double tpr = 0.0;
        for (const auto* c : defined) {
            tpr += tpr_at(c->points, x);
        }
        tpr /= static_cast<double>(defined.size());
        if (!(x == 0.0 && tpr == 0.0)) {
            out.macro.points.push_back({x, tpr});
        }
    }
    out.macro.auc = auc_sum / static_cast<double>(defined.size());
    out.macro.curve_auc = trapezoid_area(out.macro.points);
    return out;
}

double MetricsReport::headline_auc() const {
    if (confusion.n_classes() == 2 && roc.per_class.size() == 2 && roc.per_class[1].defined) {
        return roc.per_class[1].auc;
    }
    return roc.micro.auc;
}

MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       const std::vector<std::vector<double>>& scores, std::size_t n_classes) {
    MetricsReport report;
    report.confusion = confusion_matrix(y_true, y_pred, n_classes);
    report.scalars = scalar_metrics(report.confusion);
    report.roc = multiclass_roc(scores, y_true, n_classes);
    return report;
}

nlohmann::json to_json(const MetricsReport& report) {
    using nlohmann::json;
    json j;
    const auto& cm = report.confusion;
    json rows = json::array();
    for (std::size_t i = 0; i < cm.n_classes(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < cm.n_classes(); ++k) {
            row.push_back(cm.at(i, k));
        }
        rows.push_back(row);
    }
    j["confusion_matrix"] = rows;
    j["n_classes"] = cm.n_classes();
    j["total"] = cm.total();

    const auto& s = report.scalars;
    j["accuracy"] = s.accuracy;
    j["weighted"] = {{"precision", s.weighted.precision}, {"recall", s.weighted.recall}, {"f1", s.weighted.f1}};
    j["macro"] = {{"precision", s.macro.precision}, {"recall", s.macro.recall}, {"f1", s.macro.f1}};
    j["zero_denominator"] = s.zero_denominator;
    json per_class = json::object();
    for (const char* key : {"precision", "recall", "f1", "support", "tp", "fp", "fn", "tn"}) {
        per_class[key] = json::array();
    }
    per_class["undefined"] = json::array();
    for (const auto& c : s.per_class) {
        per_class["precision"].push_back(c.precision);
        per_class["recall"].push_back(c.recall);
        per_class["f1"].push_back(c.f1);
        per_class["support"].push_back(c.support);
        per_class["tp"].push_back(c.tp);
        per_class["fp"].push_back(c.fp);
        per_class["fn"].push_back(c.fn);
        per_class["tn"].push_back(c.tn);
        json flags = json::array();
        if (c.precision_undefined) flags.push_back("precision");
        if (c.recall_undefined) flags.push_back("recall");
        if (c.f1_undefined) flags.push_back("f1");
        per_class["undefined"].push_back(flags);
    }
    j["per_class"] = per_class;

    json roc;
    json class_auc = json::array();
    for (const auto& c : report.roc.per_class) {
        class_auc.push_back(c.defined ? json(c.auc) : json(nullptr));
    }
    roc["per_class_auc"] = class_auc;
    roc["micro_auc"] = report.roc.micro.auc;
    roc["macro_auc_mean_of_classes"] = report.roc.macro.defined ? json(report.roc.macro.auc) : json(nullptr);
    roc["macro_curve_auc"] = report.roc.macro.defined ? json(report.roc.macro.curve_auc) : json(nullptr);
    roc["warnings"] = report.roc.warnings;
    j["roc"] = roc;
    j["auc"] = report.headline_auc();
    return j;
}

std::string roc_csv(const RocCurve& curve) {
    std::string out = "scope,fpr,tpr\n";
    const std::string scope = curve.label();
    char buf[96];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", p.fpr, p.tpr);
        out += scope;
        out += buf;
    }
    return out;
}

} // namespace imet::metrics
