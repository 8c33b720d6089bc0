#include "lagnet/ffnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lagnet/error.hpp"

namespace lagnet {

double activate(Activation a, double x) {
    switch (a) {
        case Activation::sigmoid:
            return 1.0 / (1.0 + std::exp(-x));
        case Activation::tanh:
            return std::tanh(x);
        case Activation::identity:
            return x;
    }
    return x;
}

double activation_derivative(Activation a, double y) {
    switch (a) {
        case Activation::sigmoid:
            return y * (1.0 - y);
        case Activation::tanh:
            return 1.0 - y * y;
        case Activation::identity:
            return 1.0;
    }
    return 1.0;
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::tanh:
            return "tanh";
        case Activation::identity:
            return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "sigmoid" || name == "logistic") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity" || name == "linear") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

void NetConfig::validate() const {
    if (hidden.empty()) throw ValidationError("network needs at least one hidden layer");
    for (int h : hidden) {
        if (h < 1) throw ValidationError("hidden layer sizes must be >= 1");
    }
}

WeightLayout::WeightLayout(const NetConfig& config) {
    config.validate();
    std::size_t prev = config.input_count();
    for (int h : config.hidden) {
        offsets_.push_back(total_);
        fan_in_.push_back(prev);
        total_ += static_cast<std::size_t>(h) * (prev + 1);
        prev = static_cast<std::size_t>(h);
    }
    offsets_.push_back(total_);
    total_ += prev + 1;
}

std::size_t count_parameters(const NetConfig& config) { return WeightLayout(config).size(); }

std::vector<double> init_weights(const NetConfig& config, std::uint64_t seed,
                                 double half_width) {
    if (!(half_width > 0.0)) throw ValidationError("init half-width must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    std::vector<double> w(count_parameters(config));
    for (auto& v : w) v = dist(rng);
    return w;
}

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Per-layer activations for one record; reused across records.
class Workspace {
public:
    Workspace(const NetConfig& config, std::span<const double> weights)
        : config_(config), layout_(config), weights_(weights) {
        if (weights.size() != layout_.size()) {
            throw ValidationError("weight vector has length " + std::to_string(weights.size()) +
                                  ", expected " + std::to_string(layout_.size()));
        }
        acts_.resize(config.hidden.size());
        deltas_.resize(config.hidden.size());
        for (std::size_t l = 0; l < config.hidden.size(); ++l) {
            acts_[l].resize(static_cast<std::size_t>(config.hidden[l]));
            deltas_[l].resize(static_cast<std::size_t>(config.hidden[l]));
        }
    }

    double forward(std::span<const double> input) {
        input_ = input;
        std::span<const double> prev = input;
        for (std::size_t l = 0; l < acts_.size(); ++l) {
            const std::size_t fan = layout_.fan_in(l);
            const double* w = weights_.data() + layout_.layer_offset(l);
            for (std::size_t j = 0; j < acts_[l].size(); ++j, w += fan + 1) {
                double z = w[fan];
                for (std::size_t i = 0; i < fan; ++i) z += w[i] * prev[i];
                acts_[l][j] = activate(config_.hidden_activation, z);
            }
            prev = acts_[l];
        }
        const double* w = weights_.data() + layout_.output_offset();
        double z = w[prev.size()];
        for (std::size_t j = 0; j < prev.size(); ++j) z += w[j] * prev[j];
        output_ = activate(config_.output_activation, z);
        return output_;
    }

    // Adds d(0.5 * (y - target)^2)/dw for the last forwarded record into grad.
    void accumulate(double target, std::span<double> grad) {
        const std::size_t last = acts_.size() - 1;
        const double d_out =
            (output_ - target) * activation_derivative(config_.output_activation, output_);
        const std::size_t out = layout_.output_offset();
        const double* w_out = weights_.data() + out;
        for (std::size_t j = 0; j < acts_[last].size(); ++j) {
            grad[out + j] += d_out * acts_[last][j];
            deltas_[last][j] =
                d_out * w_out[j] *
                activation_derivative(config_.hidden_activation, acts_[last][j]);
        }
        grad[out + acts_[last].size()] += d_out;

        for (std::size_t l = acts_.size(); l-- > 0;) {
            const std::size_t fan = layout_.fan_in(l);
            std::span<const double> prev = l == 0 ? input_ : std::span<const double>(acts_[l - 1]);
            const std::size_t off = layout_.layer_offset(l);
            for (std::size_t j = 0; j < acts_[l].size(); ++j) {
                double* g = grad.data() + off + j * (fan + 1);
                const double dj = deltas_[l][j];
                for (std::size_t i = 0; i < fan; ++i) g[i] += dj * prev[i];
                g[fan] += dj;
            }
            if (l == 0) break;
            auto& below = deltas_[l - 1];
            std::fill(below.begin(), below.end(), 0.0);
            for (std::size_t j = 0; j < acts_[l].size(); ++j) {
                const double* w = weights_.data() + off + j * (fan + 1);
                for (std::size_t i = 0; i < fan; ++i) below[i] += deltas_[l][j] * w[i];
            }
            for (std::size_t i = 0; i < fan; ++i) {
                below[i] *= activation_derivative(config_.hidden_activation, acts_[l - 1][i]);
            }
        }
    }

    const WeightLayout& layout() const noexcept { return layout_; }

private:
    const NetConfig& config_;
    WeightLayout layout_;
    std::span<const double> weights_;
    std::span<const double> input_;
    std::vector<std::vector<double>> acts_;
    std::vector<std::vector<double>> deltas_;
    double output_ = 0.0;
};

void check_input(std::span<const double> input, std::size_t k) {
    if (input.size() != k) {
        throw ValidationError("input has length " + std::to_string(input.size()) +
                              ", network expects " + std::to_string(k));
    }
    for (double x : input) {
        if (!std::isfinite(x)) throw ValidationError("non-finite network input");
    }
}

}  // namespace

double forward(const NetConfig& config, std::span<const double> weights,
               std::span<const double> input) {
    check_input(input, config.input_count());
    Workspace ws(config, weights);
    return ws.forward(input);
}

Gradient backprop_gradient(const NetConfig& config, std::span<const double> weights,
                           std::span<const double> inputs, std::span<const double> targets) {
    const std::size_t k = config.input_count();
    if (targets.empty()) throw ValidationError("gradient batch is empty");
    if (inputs.size() != targets.size() * k) {
        throw ValidationError("batch inputs do not match targets x input count");
    }
    Workspace ws(config, weights);
    Gradient g;
    g.values.assign(ws.layout().size(), 0.0);
    for (std::size_t r = 0; r < targets.size(); ++r) {
        const double y = ws.forward(inputs.subspan(r * k, k));
        const double e = y - targets[r];
        g.loss += 0.5 * e * e;
        ws.accumulate(targets[r], g.values);
    }
    const bool finite = std::isfinite(g.loss) &&
                        std::all_of(g.values.begin(), g.values.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) {
        const double wn = norm(weights);
        throw DivergenceError("non-finite loss or gradient (weight norm " +
                                  std::to_string(wn) + "); try a lower learning rate",
                              wn);
    }
    return g;
}

void momentum_step(std::span<double> weights, std::span<const double> gradient,
                   std::span<double> velocity, double learning_rate, double momentum) {
    if (weights.size() != gradient.size() || weights.size() != velocity.size()) {
        throw ValidationError("momentum_step: vector lengths differ");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        velocity[i] = momentum * velocity[i] - learning_rate * gradient[i];
        weights[i] += velocity[i];
    }
}

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::batch:
            return "batch";
        case Regime::mini_batch:
            return "mini-batch";
        case Regime::online:
            return "online";
    }
    return "?";
}

Regime parse_regime(std::string_view name) {
    if (name == "batch") return Regime::batch;
    if (name == "mini-batch" || name == "minibatch" || name == "mini_batch") {
        return Regime::mini_batch;
    }
    if (name == "online") return Regime::online;
    throw ValidationError("unknown training regime '" + std::string(name) + "'");
}

std::string_view to_string(StopReason r) {
    return r == StopReason::patience ? "patience" : "max_epochs";
}

std::string_view to_string(ForecastMode m) {
    return m == ForecastMode::one_step ? "one-step" : "iterated";
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ValidationError("momentum must lie in [0, 1)");
    }
    if (regime == Regime::mini_batch && batch_size < 1) {
        throw ValidationError("mini-batch size must be >= 1");
    }
    if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
    if (patience < 0) throw ValidationError("patience must be non-negative");
    if (!(init_range > 0.0)) throw ValidationError("init range must be positive");
    if (lr_decay && !(*lr_decay > 0.0 && *lr_decay <= 1.0)) {
        throw ValidationError("learning-rate decay must lie in (0, 1]");
    }
}

bool StoppingRule::record(double loss) {
    ++epochs_;
    if (best_epoch_ < 0 || loss < best_) {
        best_ = loss;
        best_epoch_ = epochs_ - 1;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

TrainResult train_scaled(const NetConfig& config, std::span<const double> inputs,
                         std::span<const double> targets, const TrainConfig& tc) {
    tc.validate();
    const std::size_t k = config.input_count();
    const std::size_t n = targets.size();
    if (n == 0) throw ValidationError("training data is empty");
    if (inputs.size() != n * k) throw ValidationError("training inputs do not match k");

    std::vector<double> weights = init_weights(config, tc.seed, tc.init_range);
    std::vector<double> velocity(weights.size(), 0.0);
    std::vector<double> grad(weights.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::size_t group = n;
    if (tc.regime == Regime::online) group = 1;
    if (tc.regime == Regime::mini_batch) group = std::min(tc.batch_size, n);
    const bool shuffle = tc.shuffle && tc.regime != Regime::batch;
    const double inv_n = 1.0 / static_cast<double>(n);

    TrainResult result;
    result.weights = weights;
    StoppingRule rule(tc.patience);
    double lr = tc.learning_rate;

    auto diverged = [&](const char* where) {
        const double wn = norm(weights);
        return DivergenceError(std::string("training diverged (non-finite ") + where +
                                   ", weight norm " + std::to_string(wn) +
                                   "); try a lower learning rate",
                               wn);
    };

    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        if (shuffle) {
            std::seed_seq seq{static_cast<std::uint32_t>(tc.seed),
                              static_cast<std::uint32_t>(tc.seed >> 32),
                              static_cast<std::uint32_t>(epoch)};
            std::mt19937_64 rng(seq);
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (std::size_t start = 0; start < n; start += group) {
            const std::size_t end = std::min(start + group, n);
            std::fill(grad.begin(), grad.end(), 0.0);
            Workspace ws(config, weights);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t r = order[i];
                ws.forward(inputs.subspan(r * k, k));
                ws.accumulate(targets[r], grad);
            }
            for (auto& g : grad) g *= inv_n;
            momentum_step(weights, grad, velocity, lr, tc.momentum);
        }

        double sse = 0.0;
        {
            Workspace ws(config, weights);
            for (std::size_t r = 0; r < n; ++r) {
                const double e = ws.forward(inputs.subspan(r * k, k)) - targets[r];
                sse += e * e;
            }
        }
        if (!std::isfinite(sse)) throw diverged("SSE");
        result.trace.push_back(sse);
        if (rule.record(sse)) {
            result.weights = weights;
            result.best_epoch = epoch;
        } else if (tc.lr_decay) {
            lr *= *tc.lr_decay;
        }
        if (rule.should_stop()) {
            result.stop = StopReason::patience;
            break;
        }
    }
    return result;
}

double TrainedNet::train_sse() const {
    return trace.empty() ? 0.0 : *std::min_element(trace.begin(), trace.end());
}

double TrainedNet::predict(std::span<const double> raw_input) const {
    const std::size_t k = config.input_count();
    check_input(raw_input, k);
    std::vector<double> scaled(k);
    for (std::size_t i = 0; i < k; ++i) scaled[i] = input_scaler.apply(i, raw_input[i]);
    return target_scaler.invert(0, forward(config, weights, scaled));
}

TrainedNet train(const NetConfig& config, const DesignMatrix& data, const TrainConfig& tc) {
    config.validate();
    if (data.k != config.input_count()) {
        throw ValidationError("design matrix has " + std::to_string(data.k) +
                              " columns, network expects " +
                              std::to_string(config.input_count()));
    }
    if (data.rows() == 0) throw ValidationError("design matrix is empty");

    TrainedNet net;
    net.config = config;
    net.input_scaler = Scaler::fit(data.inputs, data.k, ScalerKind::z_score);
    net.target_scaler =
        config.output_activation == Activation::sigmoid
            ? Scaler::fit_series(data.targets, ScalerKind::min_max, sigmoid_target_lo,
                                 sigmoid_target_hi, "target")
            : Scaler::fit_series(data.targets, ScalerKind::z_score, 0.0, 1.0, "target");
    net.seed = tc.seed;

    const auto x = net.input_scaler.apply(data.inputs);
    const auto y = net.target_scaler.apply(data.targets);
    TrainResult tr = train_scaled(config, x, y, tc);

    const double slope = net.target_scaler.inverse_slope(0);
    net.trace.reserve(tr.trace.size());
    for (double s : tr.trace) net.trace.push_back(s * slope * slope);
    net.weights = std::move(tr.weights);
    net.epochs = static_cast<int>(tr.trace.size());
    net.stop = tr.stop;

    net.residuals.resize(data.rows());
    Workspace ws(net.config, net.weights);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double pred = net.target_scaler.invert(0, ws.forward(std::span(x).subspan(r * data.k, data.k)));
        net.residuals[r] = data.targets[r] - pred;
    }
    return net;
}

std::vector<double> forecast(const TrainedNet& net, const TimeSeries& history,
                             std::size_t horizon, ForecastMode mode,
                             std::span<const double> actuals,
                             const std::vector<std::vector<double>>& exog_future) {
    const NetConfig& cfg = net.config;
    if (horizon == 0) return {};
    if (history.size() < static_cast<std::size_t>(cfg.lags.max_lag())) {
        throw ValidationError("forecast history has " + std::to_string(history.size()) +
                              " points; at least " + std::to_string(cfg.lags.max_lag()) +
                              " are required");
    }
    if (mode == ForecastMode::one_step && actuals.size() < horizon) {
        throw ValidationError("one-step forecasting needs actual values for the whole horizon");
    }
    if (exog_future.size() < cfg.exog_count) {
        throw ValidationError("forecast needs future values for " +
                              std::to_string(cfg.exog_count) + " exogenous channel(s)");
    }
    for (std::size_t m = 0; m < cfg.exog_count; ++m) {
        if (exog_future[m].size() < horizon) {
            throw ValidationError("exogenous channel " + std::to_string(m) +
                                  " does not cover the forecast horizon");
        }
    }

    std::vector<double> path(history.values());
    path.reserve(path.size() + horizon);
    std::vector<double> row(cfg.input_count());
    std::vector<double> exog_t(cfg.exog_count);
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (std::size_t m = 0; m < cfg.exog_count; ++m) exog_t[m] = exog_future[m][h];
        fill_input_row(path, path.size(), cfg.lags, exog_t, row);
        const double pred = net.predict(row);
        out.push_back(pred);
        path.push_back(mode == ForecastMode::one_step ? actuals[h] : pred);
    }
    return out;
}

}  // namespace lagnet
