#include "oracles.hpp"

#include "imet/common/error.hpp"
#include "imet/common/rng.hpp"
#include "imet/metrics/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace imet;
using namespace imet::metrics;

namespace {

ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) cm.at(i, j) = rows[i][j];
    }
    return cm;
}

std::vector<std::vector<std::size_t>> random_rows(RngStream& rng, std::size_t n, std::size_t max_total) {
    std::vector<std::vector<std::size_t>> rows(n, std::vector<std::size_t>(n, 0));
    const std::size_t total = 1 + rng.uniform_index(max_total);
    for (std::size_t s = 0; s < total; ++s) ++rows[rng.uniform_index(n)][rng.uniform_index(n)];
    return rows;
}

void expect_monotone_unit_curve(const RocCurve& c) {
    ASSERT_GE(c.points.size(), 2u);
    EXPECT_EQ(c.points.front(), (RocPoint{0.0, 0.0}));
    EXPECT_EQ(c.points.back(), (RocPoint{1.0, 1.0}));
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
        EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    }
    EXPECT_GE(c.auc, 0.0);
    EXPECT_LE(c.auc, 1.0);
}

} // namespace

TEST(Confusion, PerfectAndAntiPerfect) {
    const std::vector<int> y{0, 1, 2, 2, 1};
    const auto cm = confusion_matrix(y, y, 3);
    EXPECT_EQ(cm.trace(), 5u);
    EXPECT_EQ(cm.total(), 5u);
    EXPECT_EQ(cm.at(2, 2), 2u);

    const std::vector<int> t{0, 1}, p{1, 0};
    const auto anti = confusion_matrix(t, p, 2);
    EXPECT_EQ(anti.trace(), 0u);
    EXPECT_EQ(anti.at(0, 1), 1u);
    EXPECT_EQ(anti.at(1, 0), 1u);
}

TEST(Confusion, RowsAreActualColumnsPredicted) {
    const std::vector<int> t{0, 0, 0, 1}, p{1, 1, 0, 1};
    const auto cm = confusion_matrix(t, p, 2);
    EXPECT_EQ(cm.at(0, 1), 2u);
    EXPECT_EQ(cm.row_sum(0), 3u);
    EXPECT_EQ(cm.column_sum(1), 3u);
}

TEST(Confusion, RangeAndLengthErrors) {
    const std::vector<int> t{0, 3}, p{0, 1};
    try {
        (void)confusion_matrix(t, p, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_label);
    }
    const std::vector<int> shorter{0};
    EXPECT_THROW((void)confusion_matrix(t, shorter, 4), Error);
}

TEST(Scalars, PneumoniaReferenceCounts) {
    // test supports: 234 normal, 390 pneumonia; diagonals 538 / 547 / 563
    struct Row {
        std::vector<std::vector<std::size_t>> cm;
        double accuracy;
    };
    const std::vector<Row> rows{{{{199, 35}, {51, 339}}, 0.862},
                                {{{197, 37}, {40, 350}}, 0.877},
                                {{{204, 30}, {31, 359}}, 0.902}};
    for (const auto& r : rows) {
        const auto cm = from_rows(r.cm);
        EXPECT_EQ(cm.total(), 624u);
        EXPECT_NEAR(scalar_metrics(cm).accuracy, r.accuracy, 0.0005);
    }
    EXPECT_EQ(from_rows(rows[2].cm).trace(), 563u);
}

TEST(Scalars, NineOfTen) {
    // class 0: TP 9, FP 1, FN 1
    const auto m = scalar_metrics(from_rows({{9, 1}, {1, 5}}));
    EXPECT_DOUBLE_EQ(m.per_class[0].precision, 0.9);
    EXPECT_DOUBLE_EQ(m.per_class[0].recall, 0.9);
    EXPECT_NEAR(m.per_class[0].f1, 0.9, 1e-15);
    EXPECT_EQ(m.per_class[0].tn, 5u);
}

TEST(Scalars, ZeroDenominatorIsZeroAndFlagged) {
    const auto m = scalar_metrics(from_rows({{4, 1, 0}, {2, 3, 0}, {0, 0, 0}}));
    const auto& c = m.per_class[2];
    EXPECT_EQ(c.precision, 0.0);
    EXPECT_EQ(c.recall, 0.0);
    EXPECT_EQ(c.f1, 0.0);
    EXPECT_TRUE(c.precision_undefined);
    EXPECT_TRUE(c.recall_undefined);
    EXPECT_TRUE(c.f1_undefined);
    EXPECT_TRUE(m.zero_denominator);
    EXPECT_FALSE(m.per_class[0].precision_undefined);
}

TEST(Scalars, EmptyMatrixRejected) {
    try {
        (void)scalar_metrics(ConfusionMatrix(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    }
}

TEST(Scalars, WeightedRecallEqualsAccuracy) {
    RngStream rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto rows = random_rows(rng, 2 + rng.uniform_index(4), 50);
        const auto m = scalar_metrics(from_rows(rows));
        EXPECT_EQ(m.weighted.recall, oracle::exact_weighted_recall(rows));
        EXPECT_EQ(m.weighted.recall, m.accuracy);
    }
}

TEST(Scalars, F1MatchesCountForm) {
    RngStream rng(32);
    for (int trial = 0; trial < 300; ++trial) {
        const auto cm = from_rows(random_rows(rng, 2 + rng.uniform_index(4), 80));
        const auto m = scalar_metrics(cm);
        for (const auto& c : m.per_class) {
            const std::size_t den = 2 * c.tp + c.fp + c.fn;
            const double expected = den == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
            EXPECT_NEAR(c.f1, expected, 1e-12);
            EXPECT_EQ(c.tp + c.fp + c.fn + c.tn, cm.total());
        }
    }
}

TEST(Scalars, AggregatesAreSupportWeightedAndMacro) {
    const auto m = scalar_metrics(from_rows({{8, 2, 0}, {1, 3, 1}, {0, 0, 5}}));
    const double p0 = 8.0 / 9.0, p1 = 3.0 / 5.0, p2 = 5.0 / 6.0;
    EXPECT_NEAR(m.weighted.precision, (10 * p0 + 5 * p1 + 5 * p2) / 20.0, 1e-15);
    EXPECT_NEAR(m.macro.precision, (p0 + p1 + p2) / 3.0, 1e-15);
    EXPECT_NEAR(m.macro.recall, (0.8 + 0.6 + 1.0) / 3.0, 1e-15);
    EXPECT_EQ(m.accuracy, 16.0 / 20.0);
}

TEST(Roc, PerfectRanking) {
    const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    const auto c = roc_curve(s, y);
    EXPECT_EQ(c.auc, 1.0);
    EXPECT_NE(std::find(c.points.begin(), c.points.end(), RocPoint{0.0, 1.0}), c.points.end());
    expect_monotone_unit_curve(c);
}

TEST(Roc, AllTiedIsTwoPointDiagonal) {
    const std::vector<double> s(6, 0.42);
    const std::vector<int> y{1, 0, 1, 0, 0, 1};
    const auto c = roc_curve(s, y);
    EXPECT_EQ(c.points, (std::vector<RocPoint>{{0, 0}, {1, 1}}));
    EXPECT_EQ(c.auc, 0.5);
}

TEST(Roc, ThreeOfFourPairs) {
    const std::vector<double> s{0.9, 0.4, 0.5, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    EXPECT_DOUBLE_EQ(roc_curve(s, y).auc, 0.75);
    EXPECT_DOUBLE_EQ(oracle::mann_whitney_auc(s, y), 0.75);
}

TEST(Roc, SingleClassUndefined) {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<int> y{1, 1};
    try {
        (void)roc_curve(s, y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::undefined_curve);
    }
}

TEST(Roc, MatchesMannWhitney) {
    RngStream rng(33);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(99);
        std::vector<double> s(n);
        std::vector<int> y(n);
        // coarse grid so ties are common
        const std::size_t levels = 1 + rng.uniform_index(20);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.uniform_index(levels)) / static_cast<double>(levels);
            y[i] = static_cast<int>(rng.uniform_index(2));
        }
        y[0] = 1;
        y[1] = 0;
        const auto c = roc_curve(s, y);
        ASSERT_NEAR(c.auc, oracle::mann_whitney_auc(s, y), 1e-9);
        expect_monotone_unit_curve(c);
    }
}

TEST(Multiclass, BinaryComplementSymmetry) {
    RngStream rng(34);
    std::vector<std::vector<double>> scores;
    std::vector<double> positive;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        const double p = static_cast<double>(rng.uniform_index(65)) / 64.0;
        scores.push_back({1.0 - p, p});
        positive.push_back(p);
        labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    labels[0] = 0;
    labels[1] = 1;
    const auto roc = multiclass_roc(scores, labels, 2);
    EXPECT_DOUBLE_EQ(roc.per_class[0].auc, roc.per_class[1].auc);
    EXPECT_DOUBLE_EQ(roc.per_class[1].auc, roc_curve(positive, labels).auc);
}

TEST(Multiclass, UninformativeScores) {
    const std::vector<std::vector<double>> scores(12, {0.25, 0.25, 0.25, 0.25});
    const std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3};
    const auto roc = multiclass_roc(scores, labels, 4);
    EXPECT_EQ(roc.micro.auc, 0.5);
    EXPECT_EQ(roc.macro.auc, 0.5);
    EXPECT_TRUE(roc.warnings.empty());
}

TEST(Multiclass, MicroEqualsPooledPairs) {
    RngStream rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> scores;
        std::vector<int> labels;
        for (int i = 0; i < 30; ++i) {
            std::vector<double> row(4);
            double sum = 0.0;
            for (auto& v : row) sum += (v = rng.uniform01() + 1e-3);
            for (auto& v : row) v /= sum;
            scores.push_back(row);
            labels.push_back(static_cast<int>(rng.uniform_index(4)));
        }
        const auto roc = multiclass_roc(scores, labels, 4);
        EXPECT_NEAR(roc.micro.auc, oracle::pooled_pair_auc(scores, labels), 1e-9);
        expect_monotone_unit_curve(roc.micro);
    }
}

TEST(Multiclass, MacroAveragesPerClass) {
    RngStream rng(36);
    std::vector<std::vector<double>> scores;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        const int label = static_cast<int>(rng.uniform_index(3));
        std::vector<double> row{rng.uniform01(), rng.uniform01(), rng.uniform01()};
        row[static_cast<std::size_t>(label)] += 0.5;
        const double sum = row[0] + row[1] + row[2];
        for (auto& v : row) v /= sum;
        scores.push_back(row);
        labels.push_back(label);
    }
    const auto roc = multiclass_roc(scores, labels, 3);
    const double mean = (roc.per_class[0].auc + roc.per_class[1].auc + roc.per_class[2].auc) / 3.0;
    EXPECT_NEAR(roc.macro.auc, mean, 1e-15);
    expect_monotone_unit_curve(roc.macro);
    EXPECT_NEAR(roc.macro.curve_auc, trapezoid_area(roc.macro.points), 1e-15);
    // vertical average at every stored grid point is the mean of per-class TPRs, so it cannot leave [min, max]
    EXPECT_GE(roc.macro.curve_auc, std::min({roc.per_class[0].auc, roc.per_class[1].auc, roc.per_class[2].auc}) - 1e-12);
}

TEST(Multiclass, AbsentClassWarnsAndIsExcluded) {
    const std::vector<std::vector<double>> scores{{0.7, 0.2, 0.1}, {0.2, 0.7, 0.1}, {0.6, 0.3, 0.1}, {0.1, 0.8, 0.1}};
    const std::vector<int> labels{0, 1, 0, 1};
    const auto roc = multiclass_roc(scores, labels, 3);
    EXPECT_FALSE(roc.per_class[2].defined);
    ASSERT_EQ(roc.warnings.size(), 1u);
    EXPECT_NE(roc.warnings[0].find("class 2"), std::string::npos);
    EXPECT_EQ(roc.macro.auc, (roc.per_class[0].auc + roc.per_class[1].auc) / 2.0);
}

TEST(Report, JsonAndCsv) {
    const std::vector<int> t{0, 1, 2, 1}, p{0, 1, 1, 1};
    const std::vector<std::vector<double>> scores{{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.5, 0.3}, {0.3, 0.6, 0.1}};
    const auto report = evaluate(t, p, scores, 3);
    EXPECT_EQ(report.headline_auc(), report.roc.micro.auc);
    const auto j = to_json(report);
    EXPECT_EQ(j["accuracy"].get<double>(), 0.75);
    EXPECT_EQ(j["confusion_matrix"][2][1].get<int>(), 1);
    EXPECT_EQ(j["per_class"]["recall"].size(), 3u);
    EXPECT_EQ(j["roc"]["per_class_auc"].size(), 3u);
    EXPECT_TRUE(j["roc"].contains("macro_auc_mean_of_classes"));
    EXPECT_TRUE(j["roc"].contains("macro_curve_auc"));

    const auto csv = roc_csv(report.roc.micro);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "scope,fpr,tpr");
    EXPECT_EQ(csv.substr(csv.find('\n') + 1, 10), "micro,0,0\n");
    EXPECT_NE(roc_csv(report.roc.per_class[2]).find("class2,1,1\n"), std::string::npos);

    // pure: identical inputs, identical output
    EXPECT_EQ(to_json(evaluate(t, p, scores, 3)).dump(), j.dump());
}

TEST(Report, BinaryHeadlineIsPositiveClass) {
    const std::vector<int> t{0, 1, 1, 0}, p{0, 1, 0, 0};
    const std::vector<std::vector<double>> scores{{0.9, 0.1}, {0.3, 0.7}, {0.6, 0.4}, {0.5, 0.5}};
    const auto report = evaluate(t, p, scores, 2);
    EXPECT_EQ(report.headline_auc(), report.roc.per_class[1].auc);
    EXPECT_DOUBLE_EQ(report.headline_auc(), 0.75);
}
