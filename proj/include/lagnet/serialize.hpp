#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "lagnet/arima.hpp"
#include "lagnet/ffnet.hpp"
#include "lagnet/select.hpp"

namespace lagnet {

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
// Empty string for nullopt.
std::string format_optional(std::optional<double> v);
// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

nlohmann::json to_json(const NetConfig& config);
NetConfig net_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& tc);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Scaler& s);
Scaler scaler_from_json(const nlohmann::json& j);

// Document with kind "lagnet.nn": config, weights, scalers, seed, trace.
nlohmann::json to_json(const TrainedNet& net);
TrainedNet trained_net_from_json(const nlohmann::json& j);

// Document with kind "lagnet.arima": spec, params, sse, r_squared, diagnostics.
nlohmann::json to_json(const ArimaFit& fit);
ArimaFit arima_fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitReport& report);

// Columns: order, n_params, activations, r_squared, sse_train,
// sse_test_onestep, sse_test_iterated, bic, seed.
std::string leaderboard_csv(const Leaderboard& board);
nlohmann::json to_json(const Leaderboard& board);

}  // namespace lagnet
