#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ae_oracle.hpp"
#include "occupilot/errors.hpp"
#include "support.hpp"

using namespace occupilot;
using namespace occupilot::autoencoder;

namespace {

AeConfig small_config(std::size_t d, Activation act, std::uint64_t seed = 1) {
    AeConfig c;
    c.layer_sizes = {d, 4, 2, 4, d};
    c.activation = act;
    c.seed = seed;
    c.learning_rate = 0.01;
    c.epochs = 50;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    auto c = AeConfig::defaults(10);
    CHECK(c.layer_sizes == std::vector<std::size_t>{10, 16, 4, 16, 10});
    CHECK_NOTHROW(c.validate(10));
    CHECK_THROWS_AS(c.validate(9), ConfigError);
    c.layer_sizes = {10, 16, 4, 8, 10};
    CHECK_THROWS_AS(c.validate(10), ConfigError);
    c.layer_sizes = {3, 3, 3};
    CHECK_THROWS_AS(c.validate(3), ConfigError);
    c = AeConfig::defaults(10);
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(10), ConfigError);
    c = AeConfig::defaults(10);
    c.train_class = 2;
    CHECK_THROWS_AS(c.validate(10), ConfigError);
}

TEST_CASE("reconstruction error examples") {
    const std::vector<double> x{1.0, 0.0}, z{0.0, 0.0};
    CHECK(squared_error(x, x) == 0.0);
    CHECK(squared_error(x, z) == 1.0);
    CHECK_THROWS_AS(squared_error(x, std::vector<double>{1.0}), DimensionMismatch);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> a(7), b(7);
        double direct = 0.0;
        for (std::size_t k = 0; k < 7; ++k) {
            a[k] = rng.normal();
            b[k] = rng.normal();
            direct += (a[k] - b[k]) * (a[k] - b[k]);
        }
        CHECK(std::abs(squared_error(a, b) - direct) <= 1e-12 * std::max(1.0, direct));
        CHECK(squared_error(a, b) >= 0.0);
    }
}

TEST_CASE("library forward pass agrees with the oracle forward pass") {
    Rng rng(2);
    for (auto act : {Activation::tanh, Activation::relu, Activation::identity}) {
        const auto model = init_model(small_config(5, act, 3));
        const auto x = testing::random_matrix(6, 5, rng);
        const double oracle = testing::oracle_loss(model.layer_sizes, act, flatten_parameters(model), x);
        CHECK(mean_loss(model, x) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(3);
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto act = std::array{Activation::tanh, Activation::relu, Activation::identity}[trial % 3];
        auto cfg = small_config(5, act, static_cast<std::uint64_t>(trial));
        auto model = init_model(cfg);
        auto flat = flatten_parameters(model);
        for (auto& v : flat) v += 0.1 * rng.normal();  // non-zero biases
        assign_parameters(model, flat);
        const auto x = testing::random_matrix(3, 5, rng);
        const double err = testing::gradient_check(model, x);
        if (err < 0.0) continue;  // relu kink inside the probe
        ++checked;
        CHECK(err < 1e-4);
    }
    CHECK(checked >= 25);
}

TEST_CASE("parameter flattening round trips") {
    auto model = init_model(small_config(6, Activation::tanh));
    auto flat = flatten_parameters(model);
    CHECK(flat.size() == 6 * 4 + 4 + 4 * 2 + 2 + 2 * 4 + 4 + 4 * 6 + 6);
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] = static_cast<double>(k);
    assign_parameters(model, flat);
    CHECK(flatten_parameters(model) == flat);
    CHECK(model.layers[0].weights(0, 1) == 1.0);
    CHECK(model.layers[0].bias[0] == 24.0);
}

TEST_CASE("a linear net reconstructs three points exactly") {
    // three points span a 2-D affine plane, so a width-2 bottleneck with biases suffices
    Matrix x;
    x.append_row(std::vector<double>{1.0, 0.0, 0.5});
    x.append_row(std::vector<double>{0.0, 1.0, -0.5});
    x.append_row(std::vector<double>{0.5, 0.5, 1.0});
    AeConfig c;
    c.layer_sizes = {3, 2, 3};
    c.activation = Activation::identity;
    c.learning_rate = 0.05;
    c.epochs = 20000;
    c.seed = 4;
    const auto m = train_ae(x, c);
    for (std::size_t r = 0; r < 3; ++r) CHECK(reconstruction_error(m, x.row(r)) < 1e-6);
}

TEST_CASE("full-batch loss trace agrees with a step-halving line-search oracle") {
    Rng rng(5);
    const auto x = testing::random_matrix(6, 3, rng);
    AeConfig c;
    c.layer_sizes = {3, 2, 3};
    c.activation = Activation::tanh;
    c.learning_rate = 0.02;
    c.epochs = 40;
    c.seed = 6;
    const auto m = train_ae(x, c);
    REQUIRE(m.loss_trace.size() == c.epochs);
    for (std::size_t e = 1; e < m.loss_trace.size(); ++e) CHECK(m.loss_trace[e] <= m.loss_trace[e - 1] + 1e-15);

    // oracle: gradient descent on the oracle loss with finite-difference gradients;
    // the line search halves the step until the loss decreases
    auto flat = flatten_parameters(init_model(c));
    auto loss = [&](const std::vector<double>& p) { return testing::oracle_loss(c.layer_sizes, c.activation, p, x); };
    int halvings = 0;
    std::vector<double> trace;
    for (std::size_t e = 0; e < c.epochs; ++e) {
        std::vector<double> g(flat.size());
        for (std::size_t k = 0; k < flat.size(); ++k) {
            auto p = flat, q = flat;
            p[k] += 1e-6;
            q[k] -= 1e-6;
            g[k] = (loss(p) - loss(q)) / 2e-6;
        }
        const double before = loss(flat);
        double step = c.learning_rate;
        std::vector<double> next(flat.size());
        while (true) {
            for (std::size_t k = 0; k < flat.size(); ++k) next[k] = flat[k] - step * g[k];
            if (loss(next) <= before || step < 1e-12) break;
            step *= 0.5;
            ++halvings;
        }
        flat = next;
        trace.push_back(loss(flat));
    }
    CHECK(halvings == 0);  // the rate is small enough for plain descent
    for (std::size_t e = 0; e < trace.size(); ++e) CHECK(testing::rel_err(trace[e], m.loss_trace[e]) < 1e-6);
}

TEST_CASE("mini-batch training lowers the loss and is seeded") {
    Rng rng(7);
    const auto x = testing::random_matrix(128, 6, rng);
    AeConfig c;
    c.layer_sizes = {6, 4, 2, 4, 6};
    c.activation = Activation::relu;
    c.batch_size = 16;
    c.epochs = 30;
    c.seed = 8;
    const auto a = train_ae(x, c);
    const auto b = train_ae(x, c);
    CHECK(a.loss_trace.size() == 30);
    CHECK(a.loss_trace.back() <= a.loss_trace.front());
    CHECK(flatten_parameters(a) == flatten_parameters(b));
    c.seed = 9;
    CHECK(flatten_parameters(train_ae(x, c)) != flatten_parameters(a));
}

TEST_CASE("full-batch result does not depend on row order") {
    Rng rng(10);
    const auto x = testing::random_matrix(40, 5, rng);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    auto c = small_config(5, Activation::tanh, 11);
    c.epochs = 25;
    const auto a = flatten_parameters(train_ae(x, c));
    const auto b = flatten_parameters(train_ae(x.select_rows(perm), c));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12 * std::max(1.0, std::abs(a[k])));
}

TEST_CASE("divergent training reports the epoch") {
    Rng rng(12);
    const auto x = testing::random_matrix(20, 5, rng, 100.0);
    auto c = small_config(5, Activation::identity, 13);
    c.learning_rate = 1e6;
    c.epochs = 1000;
    try {
        train_ae(x, c);
        FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLoss& e) {
        CHECK(e.epoch() < 1000);
    }
}

TEST_CASE("calibration examples") {
    SUBCASE("clean separation picks the largest normal error") {
        const std::vector<double> e{0.1, 0.2, 5.0};
        const std::vector<int> l{1, 1, 0};
        const auto c = calibrate_threshold(e, l, 1);
        CHECK(c.threshold == 0.2);
        CHECK(c.f1 == doctest::Approx(1.0));
    }
    SUBCASE("identical errors behave like a constant predictor") {
        const std::vector<double> e{0.7, 0.7, 0.7, 0.7, 0.7};
        const std::vector<int> l{1, 1, 1, 0, 0};
        const auto c = calibrate_threshold(e, l, 1);
        CHECK(c.threshold == 0.7);
        // every row predicted 1: precision 3/5, recall 1
        CHECK(c.f1 == doctest::Approx(2.0 * 0.6 / 1.6));
    }
    SUBCASE("ties go to the smallest threshold") {
        const std::vector<double> e{0.1, 0.3, 0.5, 0.9};
        const std::vector<int> l{1, 0, 1, 0};
        const auto c = calibrate_threshold(e, l, 1);
        // tau 0.1: F1 2/3; tau 0.5: F1 2*2/(4+1) = 0.8
        CHECK(c.threshold == 0.5);
        const std::vector<double> e2{0.1, 0.2, 0.3};
        const std::vector<int> l2{1, 0, 0};
        CHECK(calibrate_threshold(e2, l2, 1).threshold == 0.1);
    }
    SUBCASE("single class") {
        const std::vector<double> e{0.1, 0.2};
        CHECK_THROWS_AS(calibrate_threshold(e, std::vector<int>{1, 1}, 1), SingleClass);
    }
}

TEST_CASE("calibration is an exhaustive F1 sweep") {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<double> e(n);
        std::vector<int> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            l[i] = rng.bernoulli(0.5);
            e[i] = std::round(rng.uniform(0.0, 10.0) * 4.0) / 4.0 + (l[i] ? 0.0 : 1.0);
        }
        l[0] = 0;
        l[1] = 1;
        const int train_class = static_cast<int>(trial % 2);
        const auto c = calibrate_threshold(e, l, train_class);
        // brute force over every observed error
        double best = -1.0, best_tau = 0.0;
        auto sorted = e;
        std::sort(sorted.begin(), sorted.end());
        for (double tau : sorted) {
            const auto pred = classify_errors(e, tau, train_class);
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += pred[i] == 1 && l[i] == 1;
                fp += pred[i] == 1 && l[i] == 0;
                fn += pred[i] == 0 && l[i] == 1;
            }
            const double f1 = tp + fp == 0 ? -1.0 : 2 * tp / (2 * tp + fp + fn);
            if (f1 > best + 1e-15) best = f1, best_tau = tau;
        }
        CHECK(c.threshold == best_tau);
        CHECK(c.f1 == doctest::Approx(best));

        // duplicating the set leaves the threshold unchanged
        auto e2 = e;
        auto l2 = l;
        e2.insert(e2.end(), e.begin(), e.end());
        l2.insert(l2.end(), l.begin(), l.end());
        CHECK(calibrate_threshold(e2, l2, train_class).threshold == c.threshold);
    }
}

TEST_CASE("threshold boundary and class flip") {
    const std::vector<double> e{0.5, 0.50000001, 0.1};
    CHECK(classify_errors(e, 0.5, 1) == std::vector<int>{1, 0, 1});
    CHECK(classify_errors(e, 0.5, 0) == std::vector<int>{0, 1, 0});
}

TEST_CASE("prediction needs a calibrated threshold") {
    Rng rng(15);
    const auto x = testing::random_matrix(30, 5, rng);
    auto m = train_ae(x, small_config(5, Activation::tanh));
    CHECK_THROWS_AS(predict_ae(m, x), UncalibratedModel);
    std::vector<int> l(30);
    for (std::size_t i = 0; i < 30; ++i) l[i] = i % 3 == 0;
    const auto c = calibrate_threshold(m, x, l);
    REQUIRE(m.threshold);
    CHECK(*m.threshold == c.threshold);
    const auto p = predict_ae(m, x);
    CHECK(p == classify_errors(reconstruction_errors(m, x), c.threshold, m.train_class));
    CHECK_THROWS_AS(predict_ae(m, Matrix(2, 4)), DimensionMismatch);
}

TEST_CASE("model JSON round trip") {
    Rng rng(16);
    const auto x = testing::random_matrix(30, 5, rng);
    auto m = train_ae(x, small_config(5, Activation::relu));
    m.threshold = 0.25;
    const auto back = ae_from_json(to_json(m));
    CHECK(flatten_parameters(back) == flatten_parameters(m));
    CHECK(back.threshold == m.threshold);
    CHECK(back.activation == m.activation);
    CHECK(back.train_class == m.train_class);
    CHECK(reconstruction_errors(back, x) == reconstruction_errors(m, x));
}
