#include "lagnet/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lagnet/error.hpp"

namespace lagnet {

void ArimaSpec::validate() const {
    if (p < 0 || d < 0 || q < 0) throw ValidationError("ARIMA orders must be non-negative");
    if (parameter_count() == 0) {
        throw ValidationError("ARIMA model has no parameters (p + q + exog + intercept = 0)");
    }
}

std::size_t ArimaSpec::parameter_count() const {
    return static_cast<std::size_t>(p + q) + exog_count + (intercept ? 1 : 0);
}

std::string ArimaSpec::label() const {
    return std::string(exog_count > 0 ? "ARIMAX(" : "ARIMA(") + std::to_string(p) + "," +
           std::to_string(d) + "," + std::to_string(q) + ")";
}

ArimaSpec parse_arima_orders(std::string_view text) {
    std::vector<int> parts;
    std::string s(text);
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
            parts.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("ARIMA orders '" + s + "' must be three integers p,d,q");
        }
    }
    if (parts.size() != 3) throw ValidationError("ARIMA orders '" + s + "' must be p,d,q");
    ArimaSpec spec{parts[0], parts[1], parts[2]};
    if (spec.p < 0 || spec.d < 0 || spec.q < 0) {
        throw ValidationError("ARIMA orders must be non-negative");
    }
    return spec;
}

std::vector<double> ArimaParams::pack(const ArimaSpec& spec) const {
    std::vector<double> x;
    if (spec.intercept) x.push_back(intercept);
    for (int i = 0; i < spec.p; ++i) x.push_back(i < static_cast<int>(ar.size()) ? ar[i] : 0.0);
    for (int j = 0; j < spec.q; ++j) x.push_back(j < static_cast<int>(ma.size()) ? ma[j] : 0.0);
    for (std::size_t m = 0; m < spec.exog_count; ++m) {
        x.push_back(m < exog.size() ? exog[m] : 0.0);
    }
    return x;
}

ArimaParams ArimaParams::unpack(const ArimaSpec& spec, std::span<const double> x) {
    if (x.size() != spec.parameter_count()) {
        throw ValidationError("packed ARIMA parameter vector has the wrong length");
    }
    ArimaParams out;
    std::size_t i = 0;
    if (spec.intercept) out.intercept = x[i++];
    out.ar.assign(x.begin() + static_cast<std::ptrdiff_t>(i),
                  x.begin() + static_cast<std::ptrdiff_t>(i + spec.p));
    i += static_cast<std::size_t>(spec.p);
    out.ma.assign(x.begin() + static_cast<std::ptrdiff_t>(i),
                  x.begin() + static_cast<std::ptrdiff_t>(i + spec.q));
    i += static_cast<std::size_t>(spec.q);
    out.exog.assign(x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
    return out;
}

namespace {

void check_params(const ArimaSpec& spec, const ArimaParams& params) {
    if (params.ar.size() != static_cast<std::size_t>(spec.p) ||
        params.ma.size() != static_cast<std::size_t>(spec.q) ||
        params.exog.size() != spec.exog_count) {
        throw ValidationError("ARIMA parameters do not match " + spec.label());
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::isfinite(params.intercept) || !std::all_of(params.ar.begin(), params.ar.end(), finite) ||
        !std::all_of(params.ma.begin(), params.ma.end(), finite) ||
        !std::all_of(params.exog.begin(), params.exog.end(), finite)) {
        throw ValidationError("non-finite ARIMA parameter");
    }
}

void check_length(const ArimaSpec& spec, const TimeSeries& series) {
    const std::size_t need = static_cast<std::size_t>(spec.d + std::max(spec.p, spec.q));
    if (series.size() <= need) {
        throw ValidationError("series of length " + std::to_string(series.size()) +
                              " is too short for " + spec.label() + " (needs more than " +
                              std::to_string(need) + ")");
    }
    if (series.exog_count() < spec.exog_count) {
        throw ValidationError(spec.label() + " needs " + std::to_string(spec.exog_count) +
                              " exogenous channel(s)");
    }
}

long long binomial(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Value of (1 - B)^d applied at the last element of `levels`, excluding the
// current term: returns sum_{k=1..d} C(d,k) (-1)^k levels[t-k].
double lagged_difference_terms(std::span<const double> levels, std::size_t t, int d) {
    double s = 0.0;
    for (int k = 1; k <= d; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        s += sign * static_cast<double>(binomial(d, k)) * levels[t - static_cast<std::size_t>(k)];
    }
    return s;
}

}  // namespace

CssResult css_objective(const ArimaSpec& spec, const ArimaParams& params,
                        const TimeSeries& series) {
    spec.validate();
    check_params(spec, params);
    check_length(spec, series);

    const auto w = difference(std::span<const double>(series.values()), spec.d);
    const auto p = static_cast<std::size_t>(spec.p);
    const auto q = static_cast<std::size_t>(spec.q);
    const auto d = static_cast<std::size_t>(spec.d);
    std::vector<double> eps(w.size(), 0.0);
    CssResult out;
    out.residuals.reserve(w.size() - p);
    for (std::size_t t = p; t < w.size(); ++t) {
        double e = w[t] - params.intercept;
        for (std::size_t i = 1; i <= p; ++i) e -= params.ar[i - 1] * w[t - i];
        for (std::size_t j = 1; j <= q && j <= t; ++j) e -= params.ma[j - 1] * eps[t - j];
        for (std::size_t m = 0; m < spec.exog_count; ++m) {
            e -= params.exog[m] * series.exog(m).values[t + d];
        }
        eps[t] = e;
        out.residuals.push_back(e);
        out.sse += e * e;
    }
    return out;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, double tol, int max_iter) {
    if (x0.empty()) throw ValidationError("nelder_mead needs a non-empty start vector");
    if (!(tol > 0.0)) throw ValidationError("nelder_mead tolerance must be positive");
    if (max_iter < 1) throw ValidationError("nelder_mead max_iter must be >= 1");

    const std::size_t n = x0.size();
    NelderMeadResult res;
    auto eval = [&](std::span<const double> x) {
        ++res.evaluations;
        const double f = objective(x);
        return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    };
    const double f0 = objective(x0);
    ++res.evaluations;
    if (!std::isfinite(f0)) throw ValidationError("objective is not finite at the start point");

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fv(n + 1, f0);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += std::max(0.05, 0.05 * std::abs(x0[i]));
        fv[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> idx(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto order = [&] {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };
    auto along = [&](std::vector<double>& out, double coef, const std::vector<double>& from) {
        for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + coef * (from[i] - centroid[i]);
    };

    order();
    while (true) {
        const std::size_t best = idx.front();
        const std::size_t worst = idx.back();
        const std::size_t second = idx[n - 1];
        if (fv[worst] - fv[best] < tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iter) break;
        ++res.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[idx[k]][i];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        along(xr, -1.0, simplex[worst]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            along(xe, -2.0, simplex[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            along(xc, outside ? -0.5 : 0.5, simplex[worst]);
            const double fc = eval(xc);
            if (outside ? fc <= fr : fc < fv[worst]) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    auto& v = simplex[idx[k]];
                    for (std::size_t i = 0; i < n; ++i) {
                        v[i] = simplex[best][i] + 0.5 * (v[i] - simplex[best][i]);
                    }
                    fv[idx[k]] = eval(v);
                }
            }
        }
        order();
    }
    res.x = simplex[idx.front()];
    res.f = fv[idx.front()];
    return res;
}

bool is_stationary(std::span<const double> ar) {
    std::vector<double> a(ar.begin(), ar.end());
    for (std::size_t k = a.size(); k > 0; --k) {
        const double kappa = a[k - 1];
        if (!(std::abs(kappa) < 1.0)) return false;
        std::vector<double> next(k - 1);
        for (std::size_t i = 0; i + 1 < k; ++i) {
            next[i] = (a[i] + kappa * a[k - 2 - i]) / (1.0 - kappa * kappa);
        }
        a = std::move(next);
    }
    return true;
}

bool is_invertible(std::span<const double> ma) {
    std::vector<double> neg(ma.size());
    std::transform(ma.begin(), ma.end(), neg.begin(), [](double v) { return -v; });
    return is_stationary(neg);
}

ArimaFit fit_css(const ArimaSpec& spec, const TimeSeries& series, const CssOptions& opts) {
    spec.validate();
    check_length(spec, series);

    const auto w = difference(std::span<const double>(series.values()), spec.d);
    ArimaParams start;
    start.ar.assign(static_cast<std::size_t>(spec.p), 0.0);
    start.ma.assign(static_cast<std::size_t>(spec.q), 0.0);
    start.exog.assign(spec.exog_count, 0.0);
    if (spec.intercept) {
        start.intercept = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    }

    auto objective = [&](std::span<const double> x) {
        const auto params = ArimaParams::unpack(spec, x);
        for (double v : x) {
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        }
        return css_objective(spec, params, series).sse;
    };

    std::vector<double> x = start.pack(spec);
    const double f_start = objective(x);
    if (!std::isfinite(f_start)) {
        throw ValidationError("CSS objective is not finite at the start point");
    }
    const double tol = opts.relative_tol * (1.0 + f_start);

    ArimaFit fit;
    fit.spec = spec;
    auto nm = nelder_mead(objective, x, tol, opts.max_iter);
    fit.iterations = nm.iterations;
    for (int r = 0; r < opts.restarts && nm.converged; ++r) {
        auto again = nelder_mead(objective, nm.x, tol, opts.max_iter);
        fit.iterations += again.iterations;
        const bool improved = again.f < nm.f;
        if (again.f <= nm.f) nm = std::move(again);
        if (!improved) break;
    }
    fit.converged = nm.converged;
    fit.params = ArimaParams::unpack(spec, nm.x);
    auto css = css_objective(spec, fit.params, series);
    fit.sse = css.sse;
    fit.residuals = std::move(css.residuals);
    fit.n_used = fit.residuals.size();

    // One-step level predictions differ from the levels by exactly the residuals.
    const auto first = static_cast<std::size_t>(spec.d + spec.p);
    const auto& y = series.values();
    const double mean =
        std::accumulate(y.begin() + static_cast<std::ptrdiff_t>(first), y.end(), 0.0) /
        static_cast<double>(y.size() - first);
    double sst = 0.0;
    for (std::size_t t = first; t < y.size(); ++t) sst += (y[t] - mean) * (y[t] - mean);
    fit.r_squared = sst > 0.0 ? 1.0 - fit.sse / sst : -std::numeric_limits<double>::infinity();

    if (!is_stationary(fit.params.ar)) fit.warnings.emplace_back("AR part is not stationary");
    if (!is_invertible(fit.params.ma)) fit.warnings.emplace_back("MA part is not invertible");
    if (!fit.converged) fit.warnings.emplace_back("simplex did not converge");
    return fit;
}

std::vector<double> forecast_arima(const ArimaFit& fit, const TimeSeries& history,
                                   std::size_t horizon, ForecastMode mode,
                                   std::span<const double> actuals,
                                   const std::vector<std::vector<double>>& exog_future) {
    const ArimaSpec& spec = fit.spec;
    if (horizon == 0) return {};
    check_length(spec, history);
    if (mode == ForecastMode::one_step && actuals.size() < horizon) {
        throw ValidationError("one-step forecasting needs actual values for the whole horizon");
    }
    if (exog_future.size() < spec.exog_count) {
        throw ValidationError(spec.label() + " forecast needs future exogenous values");
    }
    for (std::size_t m = 0; m < spec.exog_count; ++m) {
        if (exog_future[m].size() < horizon) {
            throw ValidationError("exogenous channel " + std::to_string(m) +
                                  " does not cover the forecast horizon");
        }
    }

    const auto p = static_cast<std::size_t>(spec.p);
    const auto q = static_cast<std::size_t>(spec.q);
    const auto& params = fit.params;

    std::vector<double> levels(history.values());
    std::vector<double> w = difference(std::span<const double>(levels), spec.d);
    std::vector<double> eps(p, 0.0);
    {
        auto css = css_objective(spec, params, history);
        eps.insert(eps.end(), css.residuals.begin(), css.residuals.end());
    }

    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        const std::size_t t = w.size();
        double pred = params.intercept;
        for (std::size_t i = 1; i <= p; ++i) pred += params.ar[i - 1] * w[t - i];
        for (std::size_t j = 1; j <= q; ++j) pred += params.ma[j - 1] * eps[t - j];
        for (std::size_t m = 0; m < spec.exog_count; ++m) pred += params.exog[m] * exog_future[m][h];

        const std::size_t lt = levels.size();
        levels.push_back(0.0);
        const double level_pred = pred - lagged_difference_terms(levels, lt, spec.d);
        out.push_back(level_pred);
        if (mode == ForecastMode::one_step) {
            levels[lt] = actuals[h];
            const double observed = actuals[h] + lagged_difference_terms(levels, lt, spec.d);
            w.push_back(observed);
            eps.push_back(observed - pred);
        } else {
            levels[lt] = level_pred;
            w.push_back(pred);
            eps.push_back(0.0);
        }
    }
    return out;
}

}  // namespace lagnet
