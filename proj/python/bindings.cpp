#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagnet/arima.hpp"
#include "lagnet/cli.hpp"
#include "lagnet/error.hpp"
#include "lagnet/eval.hpp"
#include "lagnet/select.hpp"
#include "lagnet/serialize.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace lagnet;

namespace {

// Values cross the boundary as JSON text so models stay plain dicts in Python.
py::object to_py(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& o) {
    if (o.is_none()) return json::object();
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict series_dict(const TimeSeries& ts) {
    py::dict exog;
    for (const auto& c : ts.exog()) exog[py::str(c.name)] = c.values;
    py::dict d;
    d["name"] = ts.name();
    d["values"] = ts.values();
    d["exog"] = exog;
    if (!ts.dates().empty()) d["dates"] = ts.dates();
    return d;
}

TimeSeries make_series(const std::vector<double>& values, const py::object& exog) {
    std::vector<Channel> channels;
    if (!exog.is_none()) {
        for (auto item : exog.cast<py::dict>()) {
            channels.push_back({item.first.cast<std::string>(),
                                item.second.cast<std::vector<double>>()});
        }
    }
    return TimeSeries("y", values, std::move(channels));
}

SplitResult split(const TimeSeries& ts, std::optional<std::size_t> n_train) {
    if (!n_train) return {ts, std::nullopt, false};
    return split_train_test(ts, *n_train);
}

std::vector<std::vector<double>> exog_of(const TimeSeries& ts, std::size_t count) {
    std::vector<std::vector<double>> out;
    for (std::size_t m = 0; m < count; ++m) out.push_back(ts.exog(m).values);
    return out;
}

ForecastMode parse_mode(const std::string& mode) {
    if (mode == "one-step" || mode == "one_step") return ForecastMode::one_step;
    if (mode == "iterated") return ForecastMode::iterated;
    throw ValidationError("unknown forecast mode '" + mode + "'");
}

SearchSpec search_spec(int restarts, std::uint64_t seed, const std::string& hidden_rule,
                       const std::vector<std::string>& activations, const py::object& train,
                       std::optional<std::size_t> threads) {
    SearchSpec spec;
    spec.hidden_rule = parse_hidden_rule(hidden_rule);
    spec.activations.clear();
    for (const auto& a : activations) spec.activations.push_back(parse_activation_pair(a));
    spec.restarts = restarts;
    spec.base_seed = seed;
    spec.train = train_config_from_json(from_py(train));
    if (threads) spec.threads = *threads;
    return spec;
}

py::dict search(const std::vector<double>& values, const py::object& exog,
                std::optional<std::size_t> n_train, const std::string& orders,
                const std::string& hidden_rule, const std::vector<std::string>& activations,
                int restarts, std::uint64_t seed, const py::object& train,
                std::optional<std::size_t> threads) {
    auto spec = search_spec(restarts, seed, hidden_rule, activations, train, threads);
    spec.orders = parse_order_list(orders);
    const auto s = split(make_series(values, exog), n_train);
    const auto board = run_search(spec, s.train, s.test);
    py::dict d;
    d["leaderboard_csv"] = leaderboard_csv(board);
    d["report"] = to_py(to_json(board));
    return d;
}

py::object fit_nn(const std::vector<double>& values, const py::object& exog,
                  std::optional<std::size_t> n_train, const std::string& order,
                  const std::string& activations, const std::vector<int>& hidden,
                  const std::string& hidden_rule, int restarts, std::uint64_t seed,
                  const py::object& train, std::optional<std::size_t> threads) {
    auto spec = search_spec(restarts, seed, hidden_rule, {activations}, train, threads);
    const auto o = parse_order(order);
    spec.orders = {o};
    if (!hidden.empty()) spec.explicit_hidden[o.render()] = hidden;
    const auto s = split(make_series(values, exog), n_train);
    auto board = run_search(spec, s.train, s.test);
    if (board.rows.empty()) {
        std::string why = board.skipped.empty() ? "" : ": " + board.skipped.front().reason;
        throw std::runtime_error("network " + o.render() + " could not be fitted" + why);
    }
    const auto& r = board.rows.front();
    json model = to_json(r.net);
    model["report"] = to_json(r);
    model["report"].erase("network");
    return to_py(model);
}

std::vector<double> forecast_model(const py::object& model, const std::vector<double>& values,
                                   const py::object& exog, std::size_t n_train,
                                   const std::string& mode, std::optional<std::size_t> horizon) {
    const auto j = from_py(model);
    const auto s = split_train_test(make_series(values, exog), n_train);
    const auto m = parse_mode(mode);
    const std::size_t avail = s.test ? s.test->size() : 0;
    const std::size_t h = horizon.value_or(avail);
    if (h > avail) throw ValidationError("horizon exceeds the observations after the training window");
    if (h == 0) return {};
    const auto test = s.test->slice(0, h);
    const auto& actual = test.values();
    if (j.value("kind", std::string()) == "lagnet.arima") {
        const auto fit = arima_fit_from_json(j);
        return forecast_arima(fit, s.train, h, m, actual, exog_of(test, fit.spec.exog_count));
    }
    const auto net = trained_net_from_json(j);
    return forecast(net, s.train, h, m, actual, exog_of(test, net.config.exog_count));
}

py::object fit_arima(const std::vector<double>& values, const py::object& exog,
                     std::optional<std::size_t> n_train, int p, int d, int q, bool intercept) {
    const auto s = split(make_series(values, exog), n_train);
    ArimaSpec spec{p, d, q, intercept, s.train.exog_count()};
    return to_py(to_json(fit_css(spec, s.train)));
}

py::tuple cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lagged-input neural network and ARIMAX forecasting";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def(
        "simulate",
        [](const std::string& kind, std::int64_t n, std::uint64_t seed, double c,
           std::vector<double> phi, std::vector<double> theta, double sigma, double upper_c,
           std::vector<double> upper_phi, double threshold, std::optional<double> exog_beta,
           double exog_mean, const std::string& exog_name, const std::string& name) {
            GeneratorSpec g;
            if (kind == "ar" || kind == "ar1") g.kind = GeneratorSpec::Kind::ar;
            else if (kind == "arma") g.kind = GeneratorSpec::Kind::arma;
            else if (kind == "tar" || kind == "threshold-ar") g.kind = GeneratorSpec::Kind::threshold_ar;
            else throw ValidationError("unknown generator kind '" + kind + "'");
            g.intercept = c;
            g.ar = std::move(phi);
            g.ma = std::move(theta);
            g.sigma = sigma;
            g.upper_intercept = upper_c;
            g.upper_ar = std::move(upper_phi);
            g.threshold = threshold;
            g.exog_beta = exog_beta;
            g.exog_mean = exog_mean;
            g.exog_name = exog_name;
            return series_dict(lagnet::simulate(g, n, seed, name));
        },
        py::arg("kind") = "ar", py::arg("n"), py::arg("seed") = 0, py::arg("c") = 0.0,
        py::arg("phi") = std::vector<double>{}, py::arg("theta") = std::vector<double>{},
        py::arg("sigma") = 1.0, py::arg("upper_c") = 0.0,
        py::arg("upper_phi") = std::vector<double>{}, py::arg("threshold") = 0.0,
        py::arg("exog_beta") = py::none(), py::arg("exog_mean") = 5.0,
        py::arg("exog_name") = "x", py::arg("name") = "y");

    m.def(
        "load_csv",
        [](const std::string& path, const std::string& target, std::vector<std::string> exog,
           std::optional<std::string> date_column) {
            return series_dict(lagnet::load_csv(path, CsvSchema{target, std::move(exog), date_column}));
        },
        py::arg("path"), py::arg("target") = "y", py::arg("exog") = std::vector<std::string>{},
        py::arg("date_column") = py::none());

    m.def(
        "parse_order",
        [](const std::string& text) {
            const auto o = lagnet::parse_order(text);
            py::dict d;
            d["layers"] = o.layers;
            d["lags"] = o.lags.lags();
            d["canonical"] = o.render();
            return d;
        },
        py::arg("text"));

    m.def(
        "count_parameters",
        [](std::vector<int> lags, std::vector<int> hidden, std::size_t exog_count) {
            NetConfig c;
            c.lags = LagSpec(std::move(lags));
            c.hidden = std::move(hidden);
            c.exog_count = exog_count;
            c.validate();
            return lagnet::count_parameters(c);
        },
        py::arg("lags"), py::arg("hidden"), py::arg("exog_count") = 0);

    m.def(
        "hidden_layers",
        [](std::size_t k, int layers, const std::string& rule) {
            return lagnet::hidden_layers(k, layers, parse_hidden_rule(rule));
        },
        py::arg("k"), py::arg("layers") = 1, py::arg("rule") = "table");

    m.def("bic", &lagnet::bic, py::arg("n_obs"), py::arg("sse"), py::arg("n_params"));
    m.def(
        "sse",
        [](const std::vector<double>& a, const std::vector<double>& p) { return lagnet::sse(a, p); },
        py::arg("actual"), py::arg("predicted"));
    m.def(
        "r_squared",
        [](const std::vector<double>& a, const std::vector<double>& p) {
            return lagnet::r_squared(a, p);
        },
        py::arg("actual"), py::arg("predicted"));

    m.def("search", &search, py::arg("values"), py::arg("exog") = py::none(),
          py::arg("n_train") = py::none(), py::arg("orders"), py::arg("hidden_rule") = "table",
          py::arg("activations") = std::vector<std::string>{"sigmoid/identity"},
          py::arg("restarts") = 5, py::arg("seed") = 0, py::arg("train") = py::none(),
          py::arg("threads") = py::none());

    m.def("fit_nn", &fit_nn, py::arg("values"), py::arg("exog") = py::none(),
          py::arg("n_train") = py::none(), py::arg("order") = "NN(1,1+3)",
          py::arg("activations") = "sigmoid/identity", py::arg("hidden") = std::vector<int>{},
          py::arg("hidden_rule") = "table", py::arg("restarts") = 5, py::arg("seed") = 0,
          py::arg("train") = py::none(), py::arg("threads") = py::none());

    m.def("fit_arima", &fit_arima, py::arg("values"), py::arg("exog") = py::none(),
          py::arg("n_train") = py::none(), py::arg("p") = 2, py::arg("d") = 1, py::arg("q") = 1,
          py::arg("intercept") = true);

    m.def("forecast", &forecast_model, py::arg("model"), py::arg("values"),
          py::arg("exog") = py::none(), py::arg("n_train"), py::arg("mode") = "one-step",
          py::arg("horizon") = py::none());

    m.def("run_cli", &cli, py::arg("args"));
}
