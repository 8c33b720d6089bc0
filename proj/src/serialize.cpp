#include "lagnet/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "lagnet/error.hpp"

namespace lagnet {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_optional(std::optional<double> v) { return v ? format_number(*v) : ""; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

// JSON has no infinities; non-finite values travel as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(std::optional<double> v) { return v ? number_or_null(*v) : json(nullptr); }

template <typename T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("JSON document lacks '") + key + "'");
    return j.at(key).get<T>();
}

}  // namespace

json to_json(const NetConfig& config) {
    return json{{"lags", config.lags.lags()},
                {"exog_count", config.exog_count},
                {"hidden", config.hidden},
                {"hidden_activation", to_string(config.hidden_activation)},
                {"output_activation", to_string(config.output_activation)}};
}

NetConfig net_config_from_json(const json& j) {
    NetConfig c;
    c.lags = LagSpec(required<std::vector<int>>(j, "lags"));
    c.exog_count = required<std::size_t>(j, "exog_count");
    c.hidden = required<std::vector<int>>(j, "hidden");
    c.hidden_activation = parse_activation(required<std::string>(j, "hidden_activation"));
    c.output_activation = parse_activation(required<std::string>(j, "output_activation"));
    c.validate();
    return c;
}

json to_json(const TrainConfig& tc) {
    json j{{"learning_rate", tc.learning_rate},
           {"momentum", tc.momentum},
           {"regime", to_string(tc.regime)},
           {"batch_size", tc.batch_size},
           {"max_epochs", tc.max_epochs},
           {"patience", tc.patience},
           {"shuffle", tc.shuffle},
           {"seed", tc.seed},
           {"init_range", tc.init_range}};
    j["lr_decay"] = tc.lr_decay ? json(*tc.lr_decay) : json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig tc;
    tc.learning_rate = j.value("learning_rate", tc.learning_rate);
    tc.momentum = j.value("momentum", tc.momentum);
    tc.regime = parse_regime(j.value("regime", std::string(to_string(tc.regime))));
    tc.batch_size = j.value("batch_size", tc.batch_size);
    tc.max_epochs = j.value("max_epochs", tc.max_epochs);
    tc.patience = j.value("patience", tc.patience);
    tc.shuffle = j.value("shuffle", tc.shuffle);
    tc.seed = j.value("seed", tc.seed);
    tc.init_range = j.value("init_range", tc.init_range);
    if (j.contains("lr_decay") && !j.at("lr_decay").is_null()) tc.lr_decay = j.at("lr_decay").get<double>();
    tc.validate();
    return tc;
}

json to_json(const Scaler& s) {
    return json{{"kind", s.kind() == ScalerKind::z_score ? "z-score" : "min-max"},
                {"lo", s.lo()},
                {"hi", s.hi()},
                {"first", s.first()},
                {"second", s.second()}};
}

Scaler scaler_from_json(const json& j) {
    const auto kind = required<std::string>(j, "kind");
    ScalerKind k;
    if (kind == "z-score") {
        k = ScalerKind::z_score;
    } else if (kind == "min-max") {
        k = ScalerKind::min_max;
    } else {
        throw ValidationError("unknown scaler kind '" + kind + "'");
    }
    return Scaler::from_parameters(k, required<double>(j, "lo"), required<double>(j, "hi"),
                                   required<std::vector<double>>(j, "first"),
                                   required<std::vector<double>>(j, "second"));
}

json to_json(const TrainedNet& net) {
    return json{{"kind", "lagnet.nn"},
                {"config", to_json(net.config)},
                {"weights", net.weights},
                {"input_scaler", to_json(net.input_scaler)},
                {"target_scaler", to_json(net.target_scaler)},
                {"seed", net.seed},
                {"epochs", net.epochs},
                {"stop_reason", to_string(net.stop)},
                {"train_sse", net.train_sse()},
                {"trace", net.trace}};
}

TrainedNet trained_net_from_json(const json& j) {
    if (j.value("kind", std::string()) != "lagnet.nn") {
        throw ValidationError("JSON document is not a serialized network");
    }
    TrainedNet net;
    net.config = net_config_from_json(j.at("config"));
    net.weights = required<std::vector<double>>(j, "weights");
    if (net.weights.size() != count_parameters(net.config)) {
        throw ValidationError("serialized weight vector does not match the network layout");
    }
    net.input_scaler = scaler_from_json(j.at("input_scaler"));
    net.target_scaler = scaler_from_json(j.at("target_scaler"));
    if (net.input_scaler.channels() != net.config.input_count() ||
        net.target_scaler.channels() != 1) {
        throw ValidationError("serialized scalers do not match the network inputs");
    }
    net.seed = required<std::uint64_t>(j, "seed");
    net.epochs = j.value("epochs", 0);
    net.stop = j.value("stop_reason", std::string()) == "patience" ? StopReason::patience
                                                                     : StopReason::max_epochs;
    net.trace = j.value("trace", std::vector<double>{});
    return net;
}

json to_json(const ArimaFit& fit) {
    return json{{"kind", "lagnet.arima"},
                {"spec",
                 {{"p", fit.spec.p},
                  {"d", fit.spec.d},
                  {"q", fit.spec.q},
                  {"intercept", fit.spec.intercept},
                  {"exog_count", fit.spec.exog_count}}},
                {"label", fit.spec.label()},
                {"params",
                 {{"intercept", fit.params.intercept},
                  {"ar", fit.params.ar},
                  {"ma", fit.params.ma},
                  {"exog", fit.params.exog}}},
                {"sse", fit.sse},
                {"n_used", fit.n_used},
                {"r_squared", number_or_null(fit.r_squared)},
                {"diagnostics",
                 {{"iterations", fit.iterations},
                  {"converged", fit.converged},
                  {"warnings", fit.warnings}}}};
}

ArimaFit arima_fit_from_json(const json& j) {
    if (j.value("kind", std::string()) != "lagnet.arima") {
        throw ValidationError("JSON document is not a serialized ARIMA fit");
    }
    ArimaFit fit;
    const auto& s = j.at("spec");
    fit.spec.p = required<int>(s, "p");
    fit.spec.d = required<int>(s, "d");
    fit.spec.q = required<int>(s, "q");
    fit.spec.intercept = required<bool>(s, "intercept");
    fit.spec.exog_count = required<std::size_t>(s, "exog_count");
    fit.spec.validate();
    const auto& p = j.at("params");
    fit.params.intercept = required<double>(p, "intercept");
    fit.params.ar = required<std::vector<double>>(p, "ar");
    fit.params.ma = required<std::vector<double>>(p, "ma");
    fit.params.exog = required<std::vector<double>>(p, "exog");
    fit.sse = required<double>(j, "sse");
    fit.n_used = j.value("n_used", std::size_t{0});
    if (j.contains("r_squared") && !j.at("r_squared").is_null()) {
        fit.r_squared = j.at("r_squared").get<double>();
    }
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        fit.iterations = d.value("iterations", 0);
        fit.converged = d.value("converged", false);
        fit.warnings = d.value("warnings", std::vector<std::string>{});
    }
    return fit;
}

json to_json(const FitReport& r) {
    json restarts = json::array();
    for (const auto& s : r.restart_sses) restarts.push_back(optional_number(s));
    return json{{"order", r.order},
                {"activations", r.activations},
                {"hidden", r.hidden},
                {"n_params", r.n_params},
                {"r_squared", number_or_null(r.r_squared)},
                {"sse_train", r.sse_train},
                {"sse_test_onestep", optional_number(r.sse_test_onestep)},
                {"sse_test_iterated", optional_number(r.sse_test_iterated)},
                {"bic", number_or_null(r.bic)},
                {"seed", r.seed},
                {"epochs", r.epochs},
                {"stop_reason", to_string(r.stop)},
                {"n_train_rows", r.n_train_rows},
                {"restart_sses", restarts},
                {"trace", r.net.trace},
                {"network", to_json(r.net)}};
}

std::string leaderboard_csv(const Leaderboard& board) {
    std::ostringstream out;
    out << "order,n_params,activations,r_squared,sse_train,sse_test_onestep,sse_test_iterated,"
           "bic,seed\n";
    for (const auto& r : board.rows) {
        out << csv_field(r.order) << ',' << r.n_params << ',' << csv_field(r.activations) << ','
            << format_number(r.r_squared) << ',' << format_number(r.sse_train) << ','
            << format_optional(r.sse_test_onestep) << ',' << format_optional(r.sse_test_iterated)
            << ',' << format_number(r.bic) << ',' << r.seed << '\n';
    }
    return out.str();
}

json to_json(const Leaderboard& board) {
    json rows = json::array();
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        json r = to_json(board.rows[i]);
        r["rank"] = i + 1;
        r["tie_break"] = i < board.tie_break.size() ? board.tie_break[i] : "";
        rows.push_back(std::move(r));
    }
    json skipped = json::array();
    for (const auto& s : board.skipped) {
        skipped.push_back({{"order", s.order}, {"activations", s.activations}, {"reason", s.reason}});
    }
    return json{{"criterion", to_string(board.criterion)},
                {"test_length", board.test_length},
                {"rows", rows},
                {"skipped", skipped}};
}

}  // namespace lagnet
