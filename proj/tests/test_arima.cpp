#include <doctest.h>

#include <cmath>
#include <random>

#include "lagnet/arima.hpp"
#include "lagnet/error.hpp"

using namespace lagnet;

TEST_CASE("ARIMA orders parse and validate") {
    auto s = parse_arima_orders("2,1,1");
    CHECK(s.p == 2);
    CHECK(s.d == 1);
    CHECK(s.q == 1);
    CHECK(s.label() == "ARIMA(2,1,1)");
    s.exog_count = 1;
    CHECK(s.label() == "ARIMAX(2,1,1)");
    CHECK(s.parameter_count() == 5);
    CHECK(parse_arima_orders(" 1, 0 ,0 ").p == 1);
    CHECK_THROWS_AS(parse_arima_orders("2,1"), ValidationError);
    CHECK_THROWS_AS(parse_arima_orders("a,b,c"), ValidationError);
    CHECK_THROWS_AS(parse_arima_orders("-1,0,0"), ValidationError);
    CHECK_THROWS_AS(parse_arima_orders("1,0,0,1"), ValidationError);
    ArimaSpec empty;
    empty.intercept = false;
    CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("parameter packing round-trips") {
    ArimaSpec s{2, 1, 1, true, 2};
    ArimaParams p{{0.1, 0.2}, {0.3}, 0.4, {0.5, 0.6}};
    const auto x = p.pack(s);
    CHECK(x == std::vector<double>{0.4, 0.1, 0.2, 0.3, 0.5, 0.6});
    auto back = ArimaParams::unpack(s, x);
    CHECK(back.ar == p.ar);
    CHECK(back.ma == p.ma);
    CHECK(back.intercept == p.intercept);
    CHECK(back.exog == p.exog);
    CHECK_THROWS_AS(ArimaParams::unpack(s, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("CSS of a four-point AR(1) by hand") {
    TimeSeries ts("y", {1, 3, 2, 4});
    ArimaSpec s{1, 0, 0, true, 0};
    ArimaParams p{{0.5}, {}, 0.5, {}};
    auto r = css_objective(s, p, ts);
    // e = 3-0.5-0.5, 2-0.5-1.5, 4-0.5-1.0
    CHECK(r.residuals == std::vector<double>{2.0, 0.0, 2.5});
    CHECK(r.sse == doctest::Approx(10.25));
}

TEST_CASE("CSS residual recursion with MA, differencing and a covariate") {
    const std::vector<double> y{1.0, 2.5, 2.0, 4.0, 3.5, 5.0, 4.0};
    const std::vector<double> x{3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0};
    TimeSeries ts("y", y, {{"x", x}});
    ArimaSpec s{1, 1, 1, true, 1};
    ArimaParams p{{0.3}, {-0.4}, 0.2, {0.1}};
    auto r = css_objective(s, p, ts);

    std::vector<double> w;
    for (std::size_t t = 1; t < y.size(); ++t) w.push_back(y[t] - y[t - 1]);
    std::vector<double> e(w.size(), 0.0);
    double sse = 0.0;
    for (std::size_t t = 1; t < w.size(); ++t) {
        e[t] = w[t] - 0.2 - 0.3 * w[t - 1] + 0.4 * e[t - 1] - 0.1 * x[t + 1];
        sse += e[t] * e[t];
    }
    REQUIRE(r.residuals.size() == w.size() - 1);
    for (std::size_t t = 1; t < w.size(); ++t) {
        CHECK(r.residuals[t - 1] == doctest::Approx(e[t]).epsilon(1e-14));
    }
    CHECK(r.sse == doctest::Approx(sse).epsilon(1e-14));

    TimeSeries short_series("y", {1.0, 2.0});
    CHECK_THROWS_AS(css_objective(s, p, short_series), ValidationError);
    CHECK_THROWS_AS(css_objective(s, p, TimeSeries("y", y)), ValidationError);
}

TEST_CASE("Nelder-Mead on a quadratic bowl") {
    auto f = [](std::span<const double> x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0) + 3.0;
    };
    auto r = nelder_mead(f, {5.0, 5.0}, 1e-14, 5000);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-5));
    CHECK(r.f == doctest::Approx(3.0));
    CHECK(r.evaluations > r.iterations);
}

TEST_CASE("Nelder-Mead reports non-convergence at the iteration cap") {
    auto f = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    auto r = nelder_mead(f, {-1.2, 1.0}, 1e-14, 5);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 5);
}

TEST_CASE("Nelder-Mead treats non-finite values as infinitely bad") {
    auto f = [](std::span<const double> x) {
        return x[0] < 0.0 ? std::nan("") : (x[0] - 0.5) * (x[0] - 0.5);
    };
    auto r = nelder_mead(f, {0.02}, 1e-14, 2000);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK_THROWS_AS(nelder_mead(f, {-1.0}, 1e-10, 100), ValidationError);
    CHECK_THROWS_AS(nelder_mead(f, {}, 1e-10, 100), ValidationError);
}

TEST_CASE("stationarity and invertibility checks") {
    CHECK(is_stationary(std::vector<double>{}));
    CHECK(is_stationary(std::vector<double>{0.5}));
    CHECK_FALSE(is_stationary(std::vector<double>{1.2}));
    CHECK_FALSE(is_stationary(std::vector<double>{1.0}));
    CHECK(is_stationary(std::vector<double>{0.5, 0.3}));
    CHECK_FALSE(is_stationary(std::vector<double>{0.5, 0.6}));
    CHECK_FALSE(is_stationary(std::vector<double>{0.2, -1.1}));
    CHECK(is_stationary(std::vector<double>{1.2, -0.5}));
    CHECK(is_invertible(std::vector<double>{0.3}));
    CHECK(is_invertible(std::vector<double>{-0.9}));
    CHECK_FALSE(is_invertible(std::vector<double>{-1.5}));
}

TEST_CASE("CSS recovers AR(1) coefficients") {
    GeneratorSpec g;
    g.intercept = 1.0;
    g.ar = {0.5};
    auto ts = simulate(g, 500, 21);
    auto fit = fit_css(ArimaSpec{1, 0, 0, true, 0}, ts);
    CHECK(fit.converged);
    CHECK(fit.params.ar[0] == doctest::Approx(0.5).epsilon(0.2));
    CHECK(fit.params.intercept == doctest::Approx(1.0).epsilon(0.3));
    CHECK(fit.n_used == 499);
    CHECK(fit.warnings.empty());
    CHECK(fit.sse == doctest::Approx(css_objective(fit.spec, fit.params, ts).sse));
    CHECK(fit.r_squared > 0.0);
    CHECK(fit.r_squared < 1.0);
}

TEST_CASE("CSS with differencing and a covariate") {
    GeneratorSpec g;
    g.ar = {0.4};
    g.exog_beta = 2.0;
    g.exog_mean = 3.0;
    auto w = simulate(g, 600, 4);
    // Integrate once so an ARIMAX(1,1,0) on the levels sees w as its differences.
    std::vector<double> y{10.0};
    std::vector<double> x{0.0};
    for (std::size_t t = 0; t < w.size(); ++t) {
        y.push_back(y.back() + w.values()[t]);
        x.push_back(w.exog(0).values[t]);
    }
    TimeSeries levels("y", y, {{"x", x}});
    auto fit = fit_css(ArimaSpec{1, 1, 0, false, 1}, levels);
    CHECK(fit.params.ar[0] == doctest::Approx(0.4).epsilon(0.25));
    CHECK(fit.params.exog[0] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("ARIMA forecasts by hand") {
    TimeSeries ts("y", {1.0, 2.0, 4.0});
    ArimaFit fit;
    fit.spec = ArimaSpec{1, 0, 0, true, 0};
    fit.params = ArimaParams{{0.5}, {}, 1.0, {}};
    auto it = forecast_arima(fit, ts, 3, ForecastMode::iterated);
    CHECK(it[0] == doctest::Approx(3.0));
    CHECK(it[1] == doctest::Approx(2.5));
    CHECK(it[2] == doctest::Approx(2.25));
    const std::vector<double> actual{10.0, 0.0};
    auto one = forecast_arima(fit, ts, 2, ForecastMode::one_step, actual);
    CHECK(one[0] == doctest::Approx(3.0));
    CHECK(one[1] == doctest::Approx(6.0));
    CHECK(forecast_arima(fit, ts, 0, ForecastMode::iterated).empty());
    CHECK_THROWS_AS(forecast_arima(fit, ts, 3, ForecastMode::one_step, actual), ValidationError);

    // Random walk with drift integrates the constant.
    ArimaFit rw;
    rw.spec = ArimaSpec{0, 1, 0, true, 0};
    rw.params.intercept = 0.5;
    auto walk = forecast_arima(rw, ts, 3, ForecastMode::iterated);
    CHECK(walk == std::vector<double>{4.5, 5.0, 5.5});
}

TEST_CASE("one-step ARIMA forecasts reuse realised shocks") {
    TimeSeries ts("y", {0.0, 1.0, 0.5});
    ArimaFit fit;
    fit.spec = ArimaSpec{0, 0, 1, false, 0};
    fit.params.ma = {0.5};
    // In-sample residuals: e0 = 0, e1 = 1, e2 = 0.5 - 0.5 = 0.
    const std::vector<double> actual{2.0, 1.0};
    auto one = forecast_arima(fit, ts, 2, ForecastMode::one_step, actual);
    CHECK(one[0] == doctest::Approx(0.0));
    CHECK(one[1] == doctest::Approx(1.0));
    auto it = forecast_arima(fit, ts, 2, ForecastMode::iterated);
    CHECK(it == std::vector<double>{0.0, 0.0});
}
