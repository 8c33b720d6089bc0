#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagnet/timeseries.hpp"

namespace lagnet {

enum class Activation { sigmoid, tanh, identity };

double activate(Activation a, double x);
// Derivative expressed through the activated value y = activate(a, x).
double activation_derivative(Activation a, double y);

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Autoregressive single-output perceptron. The input vector is the lag values
// (ascending lag order) followed by `exog_count` contemporaneous covariates.
struct NetConfig {
    LagSpec lags{{1}};
    std::size_t exog_count = 0;
    std::vector<int> hidden{1};
    Activation hidden_activation = Activation::sigmoid;
    Activation output_activation = Activation::identity;

    std::size_t input_count() const noexcept { return lags.size() + exog_count; }
    void validate() const;
};

// Flat weight layout. Hidden layer l is a (hidden[l] x (fan_in + 1)) row-major
// block, each row holding the node's incoming weights followed by its bias.
// The output node follows with hidden.back() weights and the output bias.
class WeightLayout {
public:
    explicit WeightLayout(const NetConfig& config);

    std::size_t size() const noexcept { return total_; }
    std::size_t layer_offset(std::size_t l) const { return offsets_.at(l); }
    std::size_t fan_in(std::size_t l) const { return fan_in_.at(l); }
    std::size_t output_offset() const noexcept { return offsets_.back(); }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> fan_in_;
    std::size_t total_ = 0;
};

std::size_t count_parameters(const NetConfig& config);

// Uniform on [-half_width, half_width], deterministic in seed.
std::vector<double> init_weights(const NetConfig& config, std::uint64_t seed,
                                 double half_width = 0.5);

double forward(const NetConfig& config, std::span<const double> weights,
               std::span<const double> input);

struct Gradient {
    std::vector<double> values;
    // 0.5 * sum of squared errors over the batch.
    double loss = 0.0;
};

// Exact gradient of 0.5 * sum (forward - target)^2 over a row-major batch.
Gradient backprop_gradient(const NetConfig& config, std::span<const double> weights,
                           std::span<const double> inputs,
                           std::span<const double> targets);

// velocity = momentum * velocity - learning_rate * gradient; weights += velocity.
void momentum_step(std::span<double> weights, std::span<const double> gradient,
                   std::span<double> velocity, double learning_rate, double momentum);

enum class Regime { batch, mini_batch, online };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view name);

struct TrainConfig {
    double learning_rate = 0.4;
    double momentum = 0.9;
    Regime regime = Regime::online;
    std::size_t batch_size = 32;  // mini-batch only
    int max_epochs = 2000;
    // Consecutive non-improving epochs tolerated before stopping; 0 disables.
    int patience = 1;
    bool shuffle = false;  // online and mini-batch only
    std::uint64_t seed = 0;
    double init_range = 0.5;
    // Multiplies the learning rate after each non-improving epoch.
    std::optional<double> lr_decay;

    void validate() const;
};

enum class StopReason { patience, max_epochs };

std::string_view to_string(StopReason r);

// Tracks the best loss seen and signals a stop after `patience` consecutive
// epochs without strict improvement.
class StoppingRule {
public:
    explicit StoppingRule(int patience) : patience_(patience) {}

    // Records one epoch's loss; returns true if it improved on the best.
    bool record(double loss);
    bool should_stop() const noexcept { return patience_ > 0 && stale_ >= patience_; }
    double best() const noexcept { return best_; }
    int best_epoch() const noexcept { return best_epoch_; }
    int epochs() const noexcept { return epochs_; }

private:
    int patience_;
    int stale_ = 0;
    int epochs_ = 0;
    int best_epoch_ = -1;
    double best_ = 0.0;
};

struct TrainResult {
    std::vector<double> weights;  // weights after the best epoch
    std::vector<double> trace;    // full-data SSE after every epoch
    int best_epoch = 0;           // index into trace
    StopReason stop = StopReason::max_epochs;
};

// Gradient descent with momentum on already-scaled data. Updates use the mean
// gradient of each group (batch, mini-batch or single record).
TrainResult train_scaled(const NetConfig& config, std::span<const double> inputs,
                         std::span<const double> targets, const TrainConfig& tc);

// A network fitted through the scaling pipeline. Inputs are z-scored per
// column; targets are min-max scaled into (0.1, 0.9) for a sigmoid output and
// z-scored otherwise. trace and residuals are in original target units.
struct TrainedNet {
    NetConfig config;
    std::vector<double> weights;
    Scaler input_scaler;
    Scaler target_scaler;
    std::vector<double> trace;
    std::vector<double> residuals;
    std::uint64_t seed = 0;
    int epochs = 0;
    StopReason stop = StopReason::max_epochs;

    double train_sse() const;
    // Prediction in original units for one unscaled input row.
    double predict(std::span<const double> raw_input) const;
};

inline constexpr double sigmoid_target_lo = 0.1;
inline constexpr double sigmoid_target_hi = 0.9;

TrainedNet train(const NetConfig& config, const DesignMatrix& data, const TrainConfig& tc);

enum class ForecastMode { one_step, iterated };

std::string_view to_string(ForecastMode m);

// Forecasts `horizon` steps after the end of `history`. One-step mode feeds the
// observed `actuals` back as lags; iterated mode feeds its own predictions.
// `exog_future` holds one vector per channel covering the horizon.
std::vector<double> forecast(const TrainedNet& net, const TimeSeries& history,
                             std::size_t horizon, ForecastMode mode,
                             std::span<const double> actuals = {},
                             const std::vector<std::vector<double>>& exog_future = {});

}  // namespace lagnet
