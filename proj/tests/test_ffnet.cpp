#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lagnet/error.hpp"
#include "lagnet/ffnet.hpp"

using namespace lagnet;

namespace {

long double act(Activation a, long double x) {
    switch (a) {
        case Activation::sigmoid:
            return 1.0L / (1.0L + std::exp(-x));
        case Activation::tanh:
            return std::tanh(x);
        case Activation::identity:
            return x;
    }
    return x;
}

// Straight transcription of the network equation, independent of the library.
long double reference_forward(const NetConfig& c, const std::vector<double>& w,
                              const double* input) {
    std::vector<long double> prev(input, input + c.input_count());
    std::size_t off = 0;
    for (int size : c.hidden) {
        std::vector<long double> next(static_cast<std::size_t>(size));
        for (int j = 0; j < size; ++j) {
            long double s = 0.0L;
            for (std::size_t i = 0; i < prev.size(); ++i) s += w[off + i] * prev[i];
            s += w[off + prev.size()];
            off += prev.size() + 1;
            next[static_cast<std::size_t>(j)] = act(c.hidden_activation, s);
        }
        prev = std::move(next);
    }
    long double s = 0.0L;
    for (std::size_t j = 0; j < prev.size(); ++j) s += w[off + j] * prev[j];
    s += w[off + prev.size()];
    return act(c.output_activation, s);
}

long double reference_loss(const NetConfig& c, const std::vector<double>& w,
                           const std::vector<double>& x, const std::vector<double>& y) {
    long double loss = 0.0L;
    for (std::size_t r = 0; r < y.size(); ++r) {
        const long double e = reference_forward(c, w, x.data() + r * c.input_count()) - y[r];
        loss += 0.5L * e * e;
    }
    return loss;
}

NetConfig random_config(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nlags(1, 8), layers(1, 2), size(1, 5), kind(0, 2);
    const Activation kinds[] = {Activation::sigmoid, Activation::tanh, Activation::identity};
    NetConfig c;
    c.lags = LagSpec::contiguous(nlags(rng));
    c.exog_count = c.lags.size() < 9 ? std::uniform_int_distribution<int>(0, 1)(rng) : 0;
    c.hidden.assign(static_cast<std::size_t>(layers(rng)), 0);
    for (auto& h : c.hidden) h = size(rng);
    c.hidden_activation = kinds[kind(rng)];
    c.output_activation = kinds[kind(rng)];
    return c;
}

}  // namespace

TEST_CASE("activation values and derivatives") {
    CHECK(activate(Activation::sigmoid, 0.0) == doctest::Approx(0.5));
    CHECK(activate(Activation::tanh, 0.0) == 0.0);
    CHECK(activate(Activation::identity, -3.5) == -3.5);
    for (double x : {-2.0, -0.3, 0.0, 1.7}) {
        for (auto a : {Activation::sigmoid, Activation::tanh, Activation::identity}) {
            const double h = 1e-6;
            const double fd = (activate(a, x + h) - activate(a, x - h)) / (2 * h);
            CHECK(activation_derivative(a, activate(a, x)) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
    CHECK(parse_activation("logistic") == Activation::sigmoid);
    CHECK(parse_activation("linear") == Activation::identity);
    CHECK_THROWS_AS(parse_activation("relu"), ValidationError);
}

TEST_CASE("parameter counts follow the layer sizes") {
    NetConfig c;
    c.lags = LagSpec({1, 3});
    c.exog_count = 1;
    c.hidden = {2};
    CHECK(count_parameters(c) == 3 * 2 + 2 + 2 + 1);
    c.hidden = {3, 2};
    CHECK(count_parameters(c) == (3 * 3 + 3) + (2 * 3 + 2) + (2 + 1));
    CHECK(WeightLayout(c).size() == count_parameters(c));
}

TEST_CASE("invalid network configurations are rejected") {
    NetConfig c;
    c.hidden = {};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.hidden = {0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.hidden = {2};
    const std::vector<double> w(count_parameters(c), 0.1);
    const std::vector<double> bad_input{1.0, 2.0};
    CHECK_THROWS_AS(forward(c, w, bad_input), ValidationError);
    const std::vector<double> nan_input{std::nan("")};
    CHECK_THROWS_AS(forward(c, w, nan_input), ValidationError);
}

TEST_CASE("forward pass of a one-node linear network") {
    NetConfig c;
    c.lags = LagSpec({1});
    c.hidden = {1};
    c.hidden_activation = Activation::identity;
    c.output_activation = Activation::identity;
    // [w_in, b_hidden, w_out, b_out]
    const std::vector<double> w{2.0, 0.5, -3.0, 1.0};
    const std::vector<double> x{4.0};
    CHECK(forward(c, w, x) == doctest::Approx(-3.0 * (2.0 * 4.0 + 0.5) + 1.0));
}

TEST_CASE("forward matches the reference on random networks") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_config(rng);
        const auto w = init_weights(c, static_cast<std::uint64_t>(trial), 1.0);
        std::vector<double> x(c.input_count());
        for (auto& v : x) v = n01(rng);
        CHECK(forward(c, w, x) ==
              doctest::Approx(static_cast<double>(reference_forward(c, w, x.data())))
                  .epsilon(1e-12));
    }
}

TEST_CASE("backprop agrees with central differences of the reference loss") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto c = random_config(rng);
        const auto w = init_weights(c, static_cast<std::uint64_t>(100 + trial), 1.0);
        const std::size_t rows = 1 + static_cast<std::size_t>(trial % 7);
        std::vector<double> x(rows * c.input_count()), y(rows);
        for (auto& v : x) v = n01(rng);
        for (auto& v : y) v = n01(rng);
        const auto g = backprop_gradient(c, w, x, y);
        CHECK(g.loss == doctest::Approx(static_cast<double>(reference_loss(c, w, x, y))));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double h = 1e-5;
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double fd = static_cast<double>(
                (reference_loss(c, wp, x, y) - reference_loss(c, wm, x, y)) / (2.0L * h));
            const double err = std::abs(g.values[i] - fd) / std::max(1.0, std::abs(fd));
            worst = std::max(worst, err);
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("permuting hidden nodes leaves the output unchanged") {
    NetConfig c;
    c.lags = LagSpec({1, 2, 4});
    c.hidden = {4};
    c.hidden_activation = Activation::tanh;
    const auto w = init_weights(c, 9, 1.0);
    const std::size_t fan = c.input_count() + 1;
    const std::vector<int> perm{2, 0, 3, 1};
    std::vector<double> pw = w;
    const std::size_t out = 4 * fan;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto src = static_cast<std::size_t>(perm[j]);
        std::copy_n(w.begin() + static_cast<std::ptrdiff_t>(src * fan), fan,
                    pw.begin() + static_cast<std::ptrdiff_t>(j * fan));
        pw[out + j] = w[out + src];
    }
    const std::vector<double> x{0.3, -1.2, 2.0};
    CHECK(forward(c, pw, x) == doctest::Approx(forward(c, w, x)).epsilon(1e-14));
}

TEST_CASE("identity activations make the network affine in its input") {
    NetConfig c;
    c.lags = LagSpec({1, 2});
    c.hidden = {3};
    c.hidden_activation = Activation::identity;
    c.output_activation = Activation::identity;
    const auto w = init_weights(c, 4, 1.0);
    const std::vector<double> a{1.0, -2.0}, b{0.5, 3.0};
    const double t = 0.3;
    const std::vector<double> mix{t * a[0] + (1 - t) * b[0], t * a[1] + (1 - t) * b[1]};
    CHECK(forward(c, w, mix) ==
          doctest::Approx(t * forward(c, w, a) + (1 - t) * forward(c, w, b)).epsilon(1e-12));
}

TEST_CASE("weight initialisation is uniform within the range and seeded") {
    NetConfig c;
    c.lags = LagSpec::contiguous(5);
    c.hidden = {4, 3};
    const auto a = init_weights(c, 1);
    CHECK(a == init_weights(c, 1));
    CHECK(a != init_weights(c, 2));
    for (double v : a) {
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
    }
}

TEST_CASE("momentum step") {
    std::vector<double> w{1.0, 2.0};
    std::vector<double> v{0.5, -0.5};
    const std::vector<double> g{2.0, 1.0};
    momentum_step(w, g, v, 0.1, 0.9);
    CHECK(v[0] == doctest::Approx(0.9 * 0.5 - 0.1 * 2.0));
    CHECK(v[1] == doctest::Approx(0.9 * -0.5 - 0.1 * 1.0));
    CHECK(w[0] == doctest::Approx(1.0 + v[0]));
    CHECK(w[1] == doctest::Approx(2.0 + v[1]));
}

TEST_CASE("stopping rule on a scripted loss sequence") {
    StoppingRule rule(1);
    const std::vector<double> losses{5.0, 4.0, 3.0, 3.0, 1.0};
    std::vector<bool> improved;
    for (double l : losses) {
        improved.push_back(rule.record(l));
        if (rule.should_stop()) break;
    }
    CHECK(improved == std::vector<bool>{true, true, true, false});
    CHECK(rule.epochs() == 4);
    CHECK(rule.best() == 3.0);
    CHECK(rule.best_epoch() == 2);

    StoppingRule two(2);
    for (double l : {3.0, 4.0, 2.0, 2.5, 2.5, 1.0}) {
        two.record(l);
        if (two.should_stop()) break;
    }
    CHECK(two.epochs() == 5);
    CHECK(two.best() == 2.0);

    StoppingRule never(0);
    for (int i = 0; i < 10; ++i) never.record(1.0);
    CHECK_FALSE(never.should_stop());
}

TEST_CASE("training trace ends at the first non-improving epoch") {
    std::vector<double> v(120);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    v[0] = 0.0;
    for (std::size_t t = 1; t < v.size(); ++t) v[t] = 0.6 * v[t - 1] + n01(rng);
    TimeSeries ts("y", v);
    NetConfig c;
    c.lags = LagSpec({1, 2});
    c.hidden = {2};
    auto dm = build_design_matrix(ts, c.lags, false);
    for (auto regime : {Regime::batch, Regime::mini_batch, Regime::online}) {
        TrainConfig tc;
        tc.regime = regime;
        tc.batch_size = 16;
        tc.seed = 4;
        auto net = train(c, dm, tc);
        REQUIRE(!net.trace.empty());
        CHECK(net.epochs == static_cast<int>(net.trace.size()));
        if (net.stop == StopReason::patience) {
            const double last = net.trace.back();
            const double best_before =
                *std::min_element(net.trace.begin(), net.trace.end() - 1);
            CHECK(last >= best_before);
            for (std::size_t e = 1; e + 1 < net.trace.size(); ++e) {
                CHECK(net.trace[e] < *std::min_element(net.trace.begin(),
                                                        net.trace.begin() + static_cast<std::ptrdiff_t>(e)));
            }
        } else {
            CHECK(net.trace.size() == 2000);
        }
        CHECK(net.train_sse() == *std::min_element(net.trace.begin(), net.trace.end()));
        // The reported SSE belongs to the kept weights.
        double sse = 0.0;
        for (std::size_t r = 0; r < dm.rows(); ++r) {
            const double e = dm.targets[r] - net.predict(dm.row(r));
            sse += e * e;
        }
        CHECK(sse == doctest::Approx(net.train_sse()).epsilon(1e-9));
        CHECK(net.residuals.size() == dm.rows());
    }
}

TEST_CASE("training is deterministic in the seed") {
    std::vector<double> v;
    for (int t = 0; t < 80; ++t) v.push_back(std::sin(0.3 * t) + 0.1 * t);
    TimeSeries ts("y", v);
    NetConfig c;
    c.lags = LagSpec({1, 2, 3});
    c.hidden = {2};
    auto dm = build_design_matrix(ts, c.lags, false);
    TrainConfig tc;
    tc.seed = 12;
    tc.max_epochs = 200;
    tc.shuffle = true;
    auto a = train(c, dm, tc);
    auto b = train(c, dm, tc);
    CHECK(a.weights == b.weights);
    CHECK(a.trace == b.trace);
    tc.seed = 13;
    CHECK(train(c, dm, tc).weights != a.weights);
}

TEST_CASE("sigmoid outputs train on targets squeezed into (0.1, 0.9)") {
    std::vector<double> v;
    for (int t = 0; t < 60; ++t) v.push_back(100.0 + 10.0 * std::sin(0.5 * t));
    TimeSeries ts("y", v);
    NetConfig c;
    c.lags = LagSpec({1, 2});
    c.hidden = {2};
    c.output_activation = Activation::sigmoid;
    auto dm = build_design_matrix(ts, c.lags, false);
    TrainConfig tc;
    tc.max_epochs = 300;
    auto net = train(c, dm, tc);
    CHECK(net.target_scaler.kind() == ScalerKind::min_max);
    CHECK(net.target_scaler.apply(0, 90.0 + 0.0) <= 0.9 + 1e-12);
    const double p = net.predict(dm.row(0));
    CHECK(p > 80.0);
    CHECK(p < 120.0);
}

TEST_CASE("training configuration validation") {
    TrainConfig tc;
    CHECK_NOTHROW(tc.validate());
    tc.learning_rate = 0.0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = {};
    tc.momentum = 1.0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = {};
    tc.max_epochs = 0;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    tc = {};
    tc.patience = -1;
    CHECK_THROWS_AS(tc.validate(), ValidationError);
    CHECK(parse_regime("mini-batch") == Regime::mini_batch);
    CHECK_THROWS_AS(parse_regime("stochastic"), ValidationError);
}

TEST_CASE("a runaway learning rate is reported as divergence") {
    std::vector<double> v;
    for (int t = 0; t < 50; ++t) v.push_back(static_cast<double>(t % 7));
    TimeSeries ts("y", v);
    NetConfig c;
    c.lags = LagSpec({1});
    c.hidden = {3};
    c.hidden_activation = Activation::identity;
    c.output_activation = Activation::identity;
    auto dm = build_design_matrix(ts, c.lags, false);
    TrainConfig tc;
    tc.learning_rate = 1e3;
    tc.patience = 0;
    tc.max_epochs = 500;
    CHECK_THROWS_AS(train(c, dm, tc), DivergenceError);
}

TEST_CASE("forecasting one step and iterated") {
    std::vector<double> v, x;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    double prev = 0.0;
    for (int t = 0; t < 100; ++t) {
        x.push_back(static_cast<double>(t % 5));
        prev = 0.5 * prev + 0.3 * x.back() + n01(rng);
        v.push_back(prev);
    }
    TimeSeries all("y", v, {{"x", x}});
    auto split = split_train_test(all, 80);
    NetConfig c;
    c.lags = LagSpec({1, 2});
    c.exog_count = 1;
    c.hidden = {2};
    auto net = train(c, build_design_matrix(split.train, c.lags, true), TrainConfig{});
    const auto& actual = split.test->values();
    const std::vector<std::vector<double>> ex{split.test->exog(0).values};

    CHECK(forecast(net, split.train, 0, ForecastMode::one_step, actual, ex).empty());

    auto one = forecast(net, split.train, actual.size(), ForecastMode::one_step, actual, ex);
    REQUIRE(one.size() == actual.size());
    for (std::size_t h = 0; h < actual.size(); ++h) {
        const std::size_t t = 80 + h;
        const std::vector<double> row{v[t - 1], v[t - 2], x[t]};
        CHECK(one[h] == doctest::Approx(net.predict(row)).epsilon(1e-12));
    }

    auto it = forecast(net, split.train, 3, ForecastMode::iterated, {}, ex);
    CHECK(it[0] == doctest::Approx(one[0]));
    CHECK(it[1] == doctest::Approx(net.predict(std::vector<double>{it[0], v[79], x[81]})));
    CHECK(it[2] == doctest::Approx(net.predict(std::vector<double>{it[1], it[0], x[82]})));

    CHECK_THROWS_AS(forecast(net, split.train, 5, ForecastMode::one_step, {}, ex),
                    ValidationError);
    CHECK_THROWS_AS(forecast(net, split.train, 5, ForecastMode::iterated, {}, {}),
                    ValidationError);
    CHECK_THROWS_AS(forecast(net, split.train.slice(0, 1), 1, ForecastMode::iterated, {}, ex),
                    ValidationError);
}
