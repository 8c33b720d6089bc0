#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lagnet/ffnet.hpp"
#include "lagnet/parallel.hpp"
#include "lagnet/timeseries.hpp"

namespace lagnet {

// "NN(L,spec)": L hidden layers over the lag set `spec`, where spec joins
// integers and a-b ranges with '+', e.g. "NN(1,1+3)" or "NN(2,1-3)".
struct OrderNotation {
    int layers = 1;
    LagSpec lags{{1}};

    // Canonical text: runs of three or more lags as "a-b", others joined by '+'.
    std::string render() const;

    friend bool operator==(const OrderNotation&, const OrderNotation&) = default;
};

OrderNotation parse_order(std::string_view text);
std::vector<OrderNotation> parse_order_list(std::string_view text);
std::string render_lags(const LagSpec& lags);

enum class HiddenRule {
    explicit_sizes,       // sizes supplied per candidate
    heuristic_n,          // n hidden nodes for n inputs
    heuristic_2n_plus_1,  // 2n + 1 hidden nodes
    tabulated,            // fixed lookup k -> {3:2, 4:3, 5:3, 6:4, 7:4, 8:7, 9:7}
};

std::string_view to_string(HiddenRule r);
HiddenRule parse_hidden_rule(std::string_view name);

// Layer size from a heuristic rule (heuristic_n or heuristic_2n_plus_1).
int hidden_size(std::size_t k, HiddenRule rule);

// Hidden layer sizes for `layers` layers under a non-explicit rule. Second
// layers use the same size for heuristics and max(1, r - 1) for the table,
// so two tabulated layers over k = 4 give (3, 2).
std::vector<int> hidden_layers(std::size_t k, int layers, HiddenRule rule);

// n * ln(sse / n) + n_params * ln(n). Returns -infinity for a perfect fit.
double bic(std::size_t n_obs, double sse, std::size_t n_params);

struct RestartOutcome {
    TrainedNet best;
    std::uint64_t best_seed = 0;
    // Final train SSE per restart in seed order; nullopt for diverged runs.
    std::vector<std::optional<double>> sses;
    std::vector<std::string> failures;
};

// R independent trainings with seeds base_seed + 0 .. base_seed + R - 1;
// keeps the lowest train SSE (ties to the lower seed).
RestartOutcome multi_restart_fit(const NetConfig& config, const DesignMatrix& data,
                                 const TrainConfig& tc, int restarts,
                                 std::uint64_t base_seed,
                                 std::size_t threads = default_thread_count());

struct ActivationPair {
    Activation hidden = Activation::sigmoid;
    Activation output = Activation::identity;

    std::string label() const;
    friend bool operator==(const ActivationPair&, const ActivationPair&) = default;
};

ActivationPair parse_activation_pair(std::string_view text);

enum class Criterion { test_sse, bic };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view name);

struct Candidate {
    OrderNotation order;
    ActivationPair activations;
    std::vector<int> hidden;  // empty: derive from the rule
};

struct SearchSpec {
    std::vector<OrderNotation> orders;
    // Adds the contiguous family NN(L,1-p) for p in [first, second] and every
    // L in layer_options.
    std::optional<std::pair<int, int>> contiguous;
    std::vector<int> layer_options{1};
    HiddenRule hidden_rule = HiddenRule::tabulated;
    // Explicit sizes keyed by canonical order string; consulted first.
    std::map<std::string, std::vector<int>> explicit_hidden;
    std::vector<ActivationPair> activations{ActivationPair{}};
    int restarts = 5;
    std::uint64_t base_seed = 0;
    TrainConfig train;
    // Falls back to BIC when the test window is empty.
    Criterion criterion = Criterion::test_sse;
    bool use_exog = true;
    std::size_t threads = default_thread_count();

    // Distinct (order, activation pair) candidates in declaration order.
    std::vector<Candidate> candidates() const;
};

struct FitReport {
    std::string order;
    std::string activations;
    std::vector<int> hidden;
    std::size_t n_params = 0;
    double r_squared = 0.0;
    double sse_train = 0.0;
    std::optional<double> sse_test_onestep;
    std::optional<double> sse_test_iterated;
    double bic = 0.0;
    std::uint64_t seed = 0;
    int epochs = 0;
    StopReason stop = StopReason::max_epochs;
    std::size_t n_train_rows = 0;
    std::vector<std::optional<double>> restart_sses;
    double wall_seconds = 0.0;  // not serialized
    TrainedNet net;
};

struct SkippedCandidate {
    std::string order;
    std::string activations;
    std::string reason;
};

struct Leaderboard {
    Criterion criterion = Criterion::test_sse;
    std::vector<FitReport> rows;
    // Per row: the first sort key that separates it from the row above.
    std::vector<std::string> tie_break;
    std::vector<SkippedCandidate> skipped;
    std::size_t test_length = 0;

    double criterion_value(const FitReport& r) const;
};

// Orders reports by criterion, then fewer parameters, lower train SSE, order
// string and activation label.
void rank_reports(Leaderboard& board);

Leaderboard run_search(const SearchSpec& spec, const TimeSeries& train,
                       const std::optional<TimeSeries>& test);

// Builds the network configuration for a candidate against a series.
NetConfig candidate_config(const Candidate& c, const SearchSpec& spec,
                           std::size_t exog_count);

}  // namespace lagnet
