#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagnet/ffnet.hpp"
#include "lagnet/timeseries.hpp"

namespace lagnet {

struct ArimaSpec {
    int p = 0;
    int d = 0;
    int q = 0;
    bool intercept = true;
    std::size_t exog_count = 0;

    void validate() const;
    std::size_t parameter_count() const;
    // "ARIMA(p,d,q)" or "ARIMAX(p,d,q)" when exogenous channels are used.
    std::string label() const;
};

// Parses "p,d,q".
ArimaSpec parse_arima_orders(std::string_view text);

struct ArimaParams {
    std::vector<double> ar;
    std::vector<double> ma;
    double intercept = 0.0;
    std::vector<double> exog;

    // Packed order: [intercept if present, ar..., ma..., exog...].
    std::vector<double> pack(const ArimaSpec& spec) const;
    static ArimaParams unpack(const ArimaSpec& spec, std::span<const double> x);
};

struct CssResult {
    double sse = 0.0;
    std::vector<double> residuals;
};

// Conditional sum of squares on the d-times differenced series. The first p
// differenced values condition the recursion and presample residuals are zero:
//   e_t = w_t - c - sum phi_i w_{t-i} - sum theta_j e_{t-j} - sum beta_m x_{m,t}
// where x is the undifferenced exogenous value at the same original time index.
CssResult css_objective(const ArimaSpec& spec, const ArimaParams& params,
                        const TimeSeries& series);

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

// Downhill simplex (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
// The initial simplex steps each coordinate by max(0.05, 0.05 * |x0_i|).
// Stops when the spread of simplex values drops below tol.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, double tol, int max_iter);

struct ArimaFit {
    ArimaSpec spec;
    ArimaParams params;
    double sse = 0.0;
    std::vector<double> residuals;
    std::size_t n_used = 0;
    double r_squared = 0.0;  // level scale
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

struct CssOptions {
    // Simplex spread tolerance relative to 1 + SSE at the start point.
    double relative_tol = 1e-12;
    int max_iter = 20000;
    // Restarts of the simplex from the previous optimum.
    int restarts = 2;
};

ArimaFit fit_css(const ArimaSpec& spec, const TimeSeries& series, const CssOptions& opts = {});

// True when all roots of 1 - sum phi_i z^i lie outside the unit circle.
bool is_stationary(std::span<const double> ar);
// True when all roots of 1 + sum theta_j z^j lie outside the unit circle.
bool is_invertible(std::span<const double> ma);

// Forecasts the differenced process (future shocks zero) and integrates back
// to levels. One-step mode conditions every step on the observed `actuals`.
std::vector<double> forecast_arima(const ArimaFit& fit, const TimeSeries& history,
                                   std::size_t horizon, ForecastMode mode,
                                   std::span<const double> actuals = {},
                                   const std::vector<std::vector<double>>& exog_future = {});

}  // namespace lagnet
