#include "lagnet/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "lagnet/error.hpp"

namespace lagnet {

namespace {

bool all_finite(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TimeSeries::TimeSeries(std::string name, std::vector<double> values,
                       std::vector<Channel> exog, std::optional<std::int64_t> origin)
    : name_(std::move(name)),
      values_(std::move(values)),
      exog_(std::move(exog)),
      origin_(origin) {
    if (values_.empty()) {
        throw ValidationError("time series '" + name_ + "' is empty");
    }
    if (!all_finite(values_)) {
        throw ValidationError("time series '" + name_ + "' contains non-finite values");
    }
    for (const auto& ch : exog_) {
        if (ch.values.size() != values_.size()) {
            throw ValidationError("exogenous channel '" + ch.name + "' has length " +
                                  std::to_string(ch.values.size()) + ", expected " +
                                  std::to_string(values_.size()));
        }
        if (!all_finite(ch.values)) {
            throw ValidationError("exogenous channel '" + ch.name +
                                  "' contains non-finite values");
        }
    }
}

void TimeSeries::set_dates(std::vector<std::string> dates) {
    if (!dates.empty() && dates.size() != values_.size()) {
        throw ValidationError("date column length does not match series length");
    }
    dates_ = std::move(dates);
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size()) {
        throw ValidationError("slice out of range");
    }
    const auto b = static_cast<std::ptrdiff_t>(first);
    const auto e = static_cast<std::ptrdiff_t>(first + count);
    std::vector<Channel> exog;
    exog.reserve(exog_.size());
    for (const auto& ch : exog_) {
        exog.push_back({ch.name, {ch.values.begin() + b, ch.values.begin() + e}});
    }
    std::optional<std::int64_t> origin;
    if (origin_) origin = *origin_ + static_cast<std::int64_t>(first);
    TimeSeries out(name_, {values_.begin() + b, values_.begin() + e}, std::move(exog), origin);
    if (!dates_.empty()) out.dates_.assign(dates_.begin() + b, dates_.begin() + e);
    return out;
}

LagSpec::LagSpec(std::vector<int> lags) : lags_(std::move(lags)) {
    if (lags_.empty()) throw ValidationError("lag set is empty");
    std::sort(lags_.begin(), lags_.end());
    lags_.erase(std::unique(lags_.begin(), lags_.end()), lags_.end());
    if (lags_.front() < 1) throw ValidationError("lags must be positive integers");
}

LagSpec LagSpec::contiguous(int p) {
    if (p < 1) throw ValidationError("contiguous lag order must be >= 1");
    std::vector<int> lags(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) lags[static_cast<std::size_t>(i)] = i + 1;
    return LagSpec(std::move(lags));
}

void fill_input_row(std::span<const double> values, std::size_t t, const LagSpec& lags,
                    std::span<const double> exog_at_t, std::span<double> row) {
    std::size_t c = 0;
    for (int lag : lags.lags()) row[c++] = values[t - static_cast<std::size_t>(lag)];
    for (double x : exog_at_t) row[c++] = x;
}

DesignMatrix build_design_matrix(const TimeSeries& series, const LagSpec& lags,
                                 bool include_exog) {
    const auto n = series.size();
    const auto max_lag = static_cast<std::size_t>(lags.max_lag());
    if (max_lag >= n) {
        throw ValidationError("max lag " + std::to_string(max_lag) +
                              " must be less than series length " + std::to_string(n));
    }
    DesignMatrix dm;
    dm.max_lag = lags.max_lag();
    const std::size_t n_exog = include_exog ? series.exog_count() : 0;
    dm.k = lags.size() + n_exog;
    const std::size_t rows = n - max_lag;
    dm.inputs.resize(rows * dm.k);
    dm.targets.resize(rows);
    std::vector<double> exog_t(n_exog);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + max_lag;
        for (std::size_t m = 0; m < n_exog; ++m) exog_t[m] = series.exog(m).values[t];
        fill_input_row(series.values(), t, lags, exog_t,
                       std::span<double>(dm.inputs.data() + r * dm.k, dm.k));
        dm.targets[r] = series.values()[t];
    }
    return dm;
}

Scaler Scaler::fit(std::span<const double> data, std::size_t channels, ScalerKind kind,
                   double lo, double hi, std::span<const std::string> channel_names) {
    if (channels == 0 || data.empty() || data.size() % channels != 0) {
        throw ValidationError("scaler data must be a non-empty matrix");
    }
    if (kind == ScalerKind::min_max && !(hi > lo)) {
        throw ValidationError("min-max target interval must satisfy hi > lo");
    }
    const std::size_t rows = data.size() / channels;
    auto label = [&](std::size_t c) {
        return c < channel_names.size() ? "'" + channel_names[c] + "'"
                                        : std::to_string(c);
    };

    Scaler s;
    s.kind_ = kind;
    s.lo_ = lo;
    s.hi_ = hi;
    s.first_.assign(channels, 0.0);
    s.second_.assign(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        if (kind == ScalerKind::z_score) {
            double mean = 0.0;
            for (std::size_t r = 0; r < rows; ++r) mean += data[r * channels + c];
            mean /= static_cast<double>(rows);
            double ss = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                const double dv = data[r * channels + c] - mean;
                ss += dv * dv;
            }
            const double sd = std::sqrt(ss / static_cast<double>(rows));
            if (!(sd > 0.0)) {
                throw ValidationError("degenerate (constant) channel " + label(c) +
                                      " cannot be z-scored");
            }
            s.first_[c] = mean;
            s.second_[c] = sd;
        } else {
            double mn = data[c];
            double mx = data[c];
            for (std::size_t r = 1; r < rows; ++r) {
                mn = std::min(mn, data[r * channels + c]);
                mx = std::max(mx, data[r * channels + c]);
            }
            if (!(mx > mn)) {
                throw ValidationError("degenerate (constant) channel " + label(c) +
                                      " cannot be min-max scaled");
            }
            s.first_[c] = mn;
            s.second_[c] = mx;
        }
    }
    return s;
}

Scaler Scaler::fit_series(std::span<const double> values, ScalerKind kind, double lo,
                          double hi, const std::string& name) {
    std::vector<std::string> names;
    if (!name.empty()) names.push_back(name);
    return fit(values, 1, kind, lo, hi, names);
}

Scaler Scaler::identity(std::size_t channels) {
    Scaler s;
    s.kind_ = ScalerKind::z_score;
    s.first_.assign(channels, 0.0);
    s.second_.assign(channels, 1.0);
    return s;
}

Scaler Scaler::from_parameters(ScalerKind kind, double lo, double hi,
                               std::vector<double> first, std::vector<double> second) {
    if (first.size() != second.size()) {
        throw ValidationError("scaler parameter vectors differ in length");
    }
    for (std::size_t c = 0; c < first.size(); ++c) {
        const bool ok = kind == ScalerKind::z_score ? second[c] > 0.0 : second[c] > first[c];
        if (!ok) throw ValidationError("scaler parameters are not invertible");
    }
    if (kind == ScalerKind::min_max && !(hi > lo)) {
        throw ValidationError("min-max target interval must satisfy hi > lo");
    }
    Scaler s;
    s.kind_ = kind;
    s.lo_ = lo;
    s.hi_ = hi;
    s.first_ = std::move(first);
    s.second_ = std::move(second);
    return s;
}

double Scaler::apply(std::size_t c, double x) const {
    if (kind_ == ScalerKind::z_score) return (x - first_[c]) / second_[c];
    return lo_ + (x - first_[c]) * (hi_ - lo_) / (second_[c] - first_[c]);
}

double Scaler::invert(std::size_t c, double y) const {
    if (kind_ == ScalerKind::z_score) return y * second_[c] + first_[c];
    return first_[c] + (y - lo_) * (second_[c] - first_[c]) / (hi_ - lo_);
}

double Scaler::inverse_slope(std::size_t c) const {
    if (kind_ == ScalerKind::z_score) return second_[c];
    return (second_[c] - first_[c]) / (hi_ - lo_);
}

std::vector<double> Scaler::apply(std::span<const double> data) const {
    std::vector<double> out(data.size());
    const auto ch = channels();
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = apply(i % ch, data[i]);
    return out;
}

std::vector<double> Scaler::invert(std::span<const double> data) const {
    std::vector<double> out(data.size());
    const auto ch = channels();
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = invert(i % ch, data[i]);
    return out;
}

SplitResult split_train_test(const TimeSeries& series, std::size_t n_train) {
    if (n_train == 0 || n_train > series.size()) {
        throw ValidationError("n_train must be in [1, " + std::to_string(series.size()) +
                              "], got " + std::to_string(n_train));
    }
    if (n_train == series.size()) return {series, std::nullopt, true};
    return {series.slice(0, n_train), series.slice(n_train, series.size() - n_train), false};
}

std::vector<double> difference(std::span<const double> values, int d) {
    if (d < 0) throw ValidationError("differencing order must be non-negative");
    if (static_cast<std::size_t>(d) >= values.size()) {
        throw ValidationError("differencing order " + std::to_string(d) +
                              " must be less than series length " +
                              std::to_string(values.size()));
    }
    std::vector<double> out(values.begin(), values.end());
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

TimeSeries difference(const TimeSeries& series, int d) {
    auto values = difference(series.values(), d);
    const auto skip = static_cast<std::size_t>(d);
    TimeSeries tail = series.slice(skip, series.size() - skip);
    TimeSeries out(series.name(), std::move(values), tail.exog(), tail.origin());
    out.set_dates(tail.dates());
    return out;
}

std::vector<double> undifference(std::span<const double> differenced,
                                 std::span<const double> initial_levels) {
    const std::size_t d = initial_levels.size();
    // Rebuild each intermediate differencing level from its first value:
    // level j (0 = original) starts with the j-th difference of the initial levels.
    std::vector<std::vector<double>> seeds(d);
    std::vector<double> cur(initial_levels.begin(), initial_levels.end());
    for (std::size_t j = 0; j < d; ++j) {
        seeds[j].push_back(cur.front());
        for (std::size_t i = 0; i + 1 < cur.size(); ++i) cur[i] = cur[i + 1] - cur[i];
        if (!cur.empty()) cur.pop_back();
    }
    std::vector<double> level(differenced.begin(), differenced.end());
    for (std::size_t j = d; j-- > 0;) {
        std::vector<double> up;
        up.reserve(level.size() + 1);
        up.push_back(seeds[j].front());
        for (double v : level) up.push_back(up.back() + v);
        level = std::move(up);
    }
    return level;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    {
        std::vector<std::string> names = schema.exog;
        names.push_back(schema.target);
        if (schema.date_column) names.push_back(*schema.date_column);
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
            throw ValidationError("CSV schema column names must be distinct");
        }
    }
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CSV file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("CSV file '" + path.string() + "' has no header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    auto column_of = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ValidationError("column '" + name + "' not found in '" + path.string() + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t target_col = column_of(schema.target);
    std::vector<std::size_t> exog_cols;
    for (const auto& e : schema.exog) exog_cols.push_back(column_of(e));
    std::optional<std::size_t> date_col;
    if (schema.date_column) date_col = column_of(*schema.date_column);

    std::vector<double> values;
    std::vector<std::vector<double>> exog(exog_cols.size());
    std::vector<std::string> dates;

    auto parse_cell = [&](const std::string& raw, std::size_t row, const std::string& col) {
        const std::string cell = trim(raw);
        double v = 0.0;
        const char* b = cell.data();
        const char* e = cell.data() + cell.size();
        if (!cell.empty() && *b == '+') ++b;
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (cell.empty() || ec != std::errc() || ptr != e || !std::isfinite(v)) {
            throw ValidationError("non-numeric cell '" + cell + "' at row " +
                                  std::to_string(row) + ", column '" + col + "'");
        }
        return v;
    };

    std::size_t row = 1;  // header is row 1; data rows numbered from 2
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("ragged row " + std::to_string(row) + ": " +
                                  std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(header.size()));
        }
        values.push_back(parse_cell(cells[target_col], row, schema.target));
        for (std::size_t m = 0; m < exog_cols.size(); ++m) {
            exog[m].push_back(parse_cell(cells[exog_cols[m]], row, schema.exog[m]));
        }
        if (date_col) dates.push_back(trim(cells[*date_col]));
    }
    if (values.empty()) {
        throw ValidationError("CSV file '" + path.string() + "' has no data rows");
    }
    std::vector<Channel> channels;
    for (std::size_t m = 0; m < exog_cols.size(); ++m) {
        channels.push_back({schema.exog[m], std::move(exog[m])});
    }
    TimeSeries ts(schema.target, std::move(values), std::move(channels));
    ts.set_dates(std::move(dates));
    return ts;
}

TimeSeries simulate(const GeneratorSpec& spec, std::int64_t n, std::uint64_t seed,
                    const std::string& name) {
    if (n <= 0) throw ValidationError("simulation length must be positive");
    if (!(spec.sigma >= 0.0)) throw ValidationError("noise stddev must be non-negative");
    if (spec.kind == GeneratorSpec::Kind::ar && !spec.ma.empty()) {
        throw ValidationError("AR generator takes no MA coefficients");
    }
    if (spec.exog_beta && !(spec.exog_mean >= 0.0)) {
        throw ValidationError("exogenous count mean must be non-negative");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::poisson_distribution<int> counts(spec.exog_mean > 0.0 ? spec.exog_mean : 1.0);

    const std::size_t total = static_cast<std::size_t>(n) + simulation_burn_in;
    const std::size_t p = std::max(spec.ar.size(), spec.upper_ar.size());
    const std::size_t q = spec.kind == GeneratorSpec::Kind::arma ? spec.ma.size() : 0;
    // Presample values and shocks are zero.
    std::vector<double> y(total + p, 0.0);
    std::vector<double> e(total + q, 0.0);
    std::vector<double> x(total, 0.0);

    for (std::size_t t = 0; t < total; ++t) {
        const double shock = spec.sigma * noise(rng);
        double xt = 0.0;
        if (spec.exog_beta) {
            xt = spec.exog_mean > 0.0 ? static_cast<double>(counts(rng)) : 0.0;
        }
        const std::size_t yi = t + p;
        const std::size_t ei = t + q;

        double c = spec.intercept;
        const std::vector<double>* phi = &spec.ar;
        if (spec.kind == GeneratorSpec::Kind::threshold_ar && p > 0 &&
            y[yi - 1] > spec.threshold) {
            c = spec.upper_intercept;
            phi = &spec.upper_ar;
        }
        double v = c + shock;
        for (std::size_t i = 0; i < phi->size(); ++i) v += (*phi)[i] * y[yi - 1 - i];
        for (std::size_t j = 0; j < q; ++j) v += spec.ma[j] * e[ei - 1 - j];
        if (spec.exog_beta) v += *spec.exog_beta * xt;
        y[yi] = v;
        e[ei] = shock;
        x[t] = xt;
    }

    const auto skip = static_cast<std::ptrdiff_t>(p + simulation_burn_in);
    std::vector<double> values(y.begin() + skip, y.end());
    std::vector<Channel> exog;
    if (spec.exog_beta) {
        exog.push_back({spec.exog_name, {x.begin() + simulation_burn_in, x.end()}});
    }
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw ValidationError("simulated process diverged (non-stationary coefficients?)");
    }
    return TimeSeries(name, std::move(values), std::move(exog));
}

}  // namespace lagnet
