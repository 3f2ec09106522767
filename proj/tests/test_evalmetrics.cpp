#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "occupilot/errors.hpp"
#include "occupilot/evalmetrics.hpp"
#include "occupilot/rng.hpp"

using namespace occupilot;
using namespace occupilot::evalmetrics;

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

TEST_CASE("perfect predictions") {
    const std::vector<int> v{1, 1, 0};
    const auto c = confusion(v, v);
    CHECK(c == ConfusionCounts{2, 1, 0, 0});
    const auto m = metrics(c);
    CHECK(m.accuracy == 1.0);
    CHECK(*m.precision == 1.0);
    CHECK(*m.recall == 1.0);
    CHECK(*m.f1 == 1.0);
}

TEST_CASE("hand-counted confusion") {
    const auto c = confusion(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 1, 0, 0});
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
}

TEST_CASE("swapping the positive class swaps tp/tn and fp/fn") {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> p(50), l(50);
        for (std::size_t i = 0; i < 50; ++i) {
            p[i] = rng.bernoulli(0.5);
            l[i] = rng.bernoulli(0.4);
        }
        const auto a = confusion(p, l, 1), b = confusion(p, l, 0);
        CHECK(a.tp == b.tn);
        CHECK(a.tn == b.tp);
        CHECK(a.fp == b.fn);
        CHECK(a.fn == b.fp);
        CHECK(a.total() == 50);
        CHECK(metrics(a).accuracy == metrics(b).accuracy);
    }
}

TEST_CASE("uniform counts give 0.5 everywhere") {
    const auto m = metrics({1, 1, 1, 1});
    CHECK(m.accuracy == 0.5);
    CHECK(*m.precision == 0.5);
    CHECK(*m.recall == 0.5);
    CHECK(*m.f1 == 0.5);
}

TEST_CASE("published precision/recall pairs reproduce their F1") {
    struct Row { double p, r, f1; };
    for (auto row : {Row{0.887, 0.885, 0.886}, Row{0.954, 0.950, 0.952}, Row{0.903, 0.901, 0.902},
                     Row{0.916, 0.918, 0.917}})
        CHECK(round3(f1_score(row.p, row.r)) == doctest::Approx(row.f1).epsilon(1e-12));
}

TEST_CASE("undefined metrics are markers, never NaN") {
    const auto none_predicted = metrics({0, 5, 0, 3});
    CHECK_FALSE(none_predicted.precision);
    CHECK(*none_predicted.recall == 0.0);
    CHECK_FALSE(none_predicted.f1);
    const auto no_positives = metrics({0, 5, 2, 0});
    CHECK(*no_positives.precision == 0.0);
    CHECK_FALSE(no_positives.recall);
    CHECK_FALSE(no_positives.f1);
    CHECK(format_metric(std::nullopt) == "n/a");
    CHECK(format_metric(0.12345) == "0.123");
    CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), LengthMismatch);
    CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}), LengthMismatch);
    CHECK_THROWS_AS(metrics(ConfusionCounts{}), EmptyEvaluation);
}

TEST_CASE("f1 is the harmonic mean and lies between precision and recall") {
    Rng rng(2);
    for (int trial = 0; trial < 10000; ++trial) {
        ConfusionCounts c{rng.index(100), rng.index(100), rng.index(100), rng.index(100)};
        if (c.total() == 0) continue;
        const auto m = metrics(c);
        CHECK(m.accuracy >= 0.0);
        CHECK(m.accuracy <= 1.0);
        if (!m.f1) continue;
        const double p = *m.precision, r = *m.recall;
        CHECK(*m.f1 >= std::min(p, r) - 1e-12);
        CHECK(*m.f1 <= std::max(p, r) + 1e-12);
        if (p + r > 0) CHECK(std::abs(*m.f1 - 2 * p * r / (p + r)) <= 1e-12);
    }
}

TEST_CASE("table keeps the column order and renders markers") {
    std::vector<ReportRow> rows{make_row("SVM", "Room 1", {8, 9, 1, 2}), make_row("Autoencoder", "Room 2", {0, 4, 0, 1})};
    const auto text = render_table(rows);
    const auto head = text.substr(0, text.find('\n'));
    CHECK(head.find("Algorithm") < head.find("Location"));
    CHECK(head.find("Location") < head.find("Accuracy"));
    CHECK(head.find("Accuracy") < head.find("Precision"));
    CHECK(head.find("Precision") < head.find("Recall"));
    CHECK(head.find("Recall") < head.find("F1"));
    CHECK(text.find("n/a") != std::string::npos);
    CHECK(text.find("0.850") != std::string::npos);  // accuracy 17/20

    const auto doc = to_json(rows);
    CHECK(doc["rows"].size() == 2);
    CHECK(doc["rows"][1]["precision"].is_null());
    CHECK(doc["rows"][0]["accuracy"].get<double>() == 0.85);  // full precision in JSON
}
