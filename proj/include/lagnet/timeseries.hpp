#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lagnet {

struct Channel {
    std::string name;
    std::vector<double> values;
};

// A univariate target series with zero or more aligned exogenous channels.
// Construction validates: non-empty, all finite, every channel the same
// length as the target.
class TimeSeries {
public:
    TimeSeries(std::string name, std::vector<double> values,
               std::vector<Channel> exog = {},
               std::optional<std::int64_t> origin = std::nullopt);

    const std::string& name() const noexcept { return name_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<Channel>& exog() const noexcept { return exog_; }
    const Channel& exog(std::size_t i) const { return exog_.at(i); }
    std::size_t exog_count() const noexcept { return exog_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    std::optional<std::int64_t> origin() const noexcept { return origin_; }

    // Date labels carried from a CSV date column; empty or aligned with values.
    const std::vector<std::string>& dates() const noexcept { return dates_; }
    void set_dates(std::vector<std::string> dates);

    // Observations [first, first + count) with aligned channels and dates.
    TimeSeries slice(std::size_t first, std::size_t count) const;

private:
    std::string name_;
    std::vector<double> values_;
    std::vector<Channel> exog_;
    std::optional<std::int64_t> origin_;
    std::vector<std::string> dates_;
};

// Ascending set of distinct positive lags.
class LagSpec {
public:
    explicit LagSpec(std::vector<int> lags);

    const std::vector<int>& lags() const noexcept { return lags_; }
    std::size_t size() const noexcept { return lags_.size(); }
    int max_lag() const noexcept { return lags_.back(); }

    // Contiguous set {1, ..., p}.
    static LagSpec contiguous(int p);

    friend bool operator==(const LagSpec&, const LagSpec&) = default;

private:
    std::vector<int> lags_;
};

// Row-major lagged regression data: row r predicts values[max_lag + r].
struct DesignMatrix {
    std::vector<double> inputs;
    std::vector<double> targets;
    std::size_t k = 0;
    int max_lag = 0;

    std::size_t rows() const noexcept { return targets.size(); }
    std::span<const double> row(std::size_t r) const {
        return {inputs.data() + r * k, k};
    }
};

DesignMatrix build_design_matrix(const TimeSeries& series, const LagSpec& lags,
                                 bool include_exog);

// Fills `row` (length |lags| + exog count) with the lag inputs and
// contemporaneous exog values for target time t, reading the target history
// from `values` and channel values at t from `exog_at_t`.
void fill_input_row(std::span<const double> values, std::size_t t,
                    const LagSpec& lags, std::span<const double> exog_at_t,
                    std::span<double> row);

enum class ScalerKind { z_score, min_max };

// Per-channel affine map. Channels are columns of a row-major matrix.
class Scaler {
public:
    static Scaler fit(std::span<const double> data, std::size_t channels,
                      ScalerKind kind, double lo = 0.0, double hi = 1.0,
                      std::span<const std::string> channel_names = {});
    static Scaler fit_series(std::span<const double> values, ScalerKind kind,
                             double lo = 0.0, double hi = 1.0,
                             const std::string& name = "");
    // Identity map on `channels` channels.
    static Scaler identity(std::size_t channels);
    // Rebuilds a scaler from stored parameters (offset/scale form).
    static Scaler from_parameters(ScalerKind kind, double lo, double hi,
                                  std::vector<double> first,
                                  std::vector<double> second);

    ScalerKind kind() const noexcept { return kind_; }
    std::size_t channels() const noexcept { return first_.size(); }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    // z-score: mean/stddev; min-max: min/max.
    const std::vector<double>& first() const noexcept { return first_; }
    const std::vector<double>& second() const noexcept { return second_; }

    double apply(std::size_t channel, double x) const;
    double invert(std::size_t channel, double y) const;
    // Derivative of invert with respect to y (constant for affine maps).
    double inverse_slope(std::size_t channel) const;

    std::vector<double> apply(std::span<const double> data) const;
    std::vector<double> invert(std::span<const double> data) const;

private:
    ScalerKind kind_ = ScalerKind::z_score;
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<double> first_;
    std::vector<double> second_;
};

// `test` is empty when n_train equals the series length; `warning` is then set.
struct SplitResult {
    TimeSeries train;
    std::optional<TimeSeries> test;
    bool warning = false;
};

SplitResult split_train_test(const TimeSeries& series, std::size_t n_train);

// d-fold first differencing of the target; exog channels are truncated from
// the front, not differenced.
TimeSeries difference(const TimeSeries& series, int d);
std::vector<double> difference(std::span<const double> values, int d);

// Inverse of difference(values, d) given the first d original levels.
std::vector<double> undifference(std::span<const double> differenced,
                                 std::span<const double> initial_levels);

struct CsvSchema {
    std::string target;
    std::vector<std::string> exog;
    std::optional<std::string> date_column;
};

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Synthetic processes used for testing and demonstrations.
//   ar:           y_t = c + sum phi_i y_{t-i} + e_t
//   arma:         y_t = c + sum phi_i y_{t-i} + sum theta_j e_{t-j} + e_t
//   threshold_ar: (c, phi) when y_{t-1} <= threshold, else (upper_c, upper_phi)
// An optional exogenous effect adds beta * x_t with x_t ~ Poisson(exog_mean).
struct GeneratorSpec {
    enum class Kind { ar, arma, threshold_ar };

    Kind kind = Kind::ar;
    double intercept = 0.0;
    std::vector<double> ar;
    std::vector<double> ma;
    double sigma = 1.0;

    double upper_intercept = 0.0;
    std::vector<double> upper_ar;
    double threshold = 0.0;

    std::optional<double> exog_beta;
    double exog_mean = 5.0;
    std::string exog_name = "x";
};

inline constexpr int simulation_burn_in = 100;

TimeSeries simulate(const GeneratorSpec& spec, std::int64_t n, std::uint64_t seed,
                    const std::string& name = "y");

}  // namespace lagnet
