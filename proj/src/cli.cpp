#include "lagnet/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "lagnet/arima.hpp"
#include "lagnet/error.hpp"
#include "lagnet/eval.hpp"
#include "lagnet/ffnet.hpp"
#include "lagnet/plot.hpp"
#include "lagnet/select.hpp"
#include "lagnet/serialize.hpp"
#include "lagnet/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lagnet {

namespace {

// A fit or search that produced nothing usable (exit code 1).
class FitFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --config reader: keys are long option names without dashes. Top-level
// scalars belong to the subcommand on the command line; nested objects
// address subcommands by name.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json doc;
        try {
            doc = json::parse(input);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw ValidationError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        std::vector<std::string> base;
        if (auto subs = root_->get_subcommands(); !subs.empty()) base.push_back(subs.front()->get_name());
        collect(doc, base, items);
        return items;
    }

private:
    const CLI::App* root_;

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw ValidationError("config values must be strings, numbers, booleans or arrays");
    }

    static void collect(const json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_null()) continue;
            if (value.is_object()) {
                auto nested = std::vector<std::string>{key};
                collect(value, nested, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
};

// Files written by one command; removed again unless the command commits.
class OutputSet {
public:
    OutputSet() = default;
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        if (committed_) return;
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    void write(const fs::path& path, const std::string& content) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        written_.push_back(path);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        f << content;
        f.close();
        if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
    }

    void commit() { committed_ = true; }

private:
    std::vector<fs::path> written_;
    bool committed_ = false;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct DataOptions {
    std::string input;
    std::string target = "y";
    std::vector<std::string> exog;
    std::string date_column;
    std::size_t train = 0;
    CLI::Option* train_opt = nullptr;
};

void add_data_options(CLI::App* cmd, DataOptions& d, bool train_required) {
    cmd->add_option("--input", d.input, "CSV file with the series")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--target", d.target, "target column")->capture_default_str();
    cmd->add_option("--exog", d.exog, "exogenous column(s), comma separated")->delimiter(',');
    cmd->add_option("--date-column", d.date_column, "optional date label column");
    d.train_opt = cmd->add_option("--train", d.train, "number of training observations");
    if (train_required) d.train_opt->required();
}

TimeSeries load_data(const DataOptions& d) {
    CsvSchema schema{d.target, d.exog, std::nullopt};
    if (!d.date_column.empty()) schema.date_column = d.date_column;
    return load_csv(d.input, schema);
}

SplitResult split_data(const TimeSeries& series, const DataOptions& d, std::ostream& err) {
    const std::size_t n_train = d.train_opt->count() > 0 ? d.train : series.size();
    auto split = split_train_test(series, n_train);
    if (split.warning) err << "warning: no test window; every observation is used for training\n";
    return split;
}

json data_json(const DataOptions& d, std::size_t n_train) {
    return json{{"input", d.input},
                {"target", d.target},
                {"exog", d.exog},
                {"train", n_train}};
}

struct TrainOptions {
    TrainConfig tc;
    std::string regime = "online";
    double lr_decay = 0.0;
    CLI::Option* lr_decay_opt = nullptr;
};

void add_train_options(CLI::App* cmd, TrainOptions& t) {
    cmd->add_option("--lr,--learning-rate", t.tc.learning_rate, "learning rate")
        ->capture_default_str();
    cmd->add_option("--momentum", t.tc.momentum, "momentum coefficient")->capture_default_str();
    cmd->add_option("--regime", t.regime, "batch, mini-batch or online")->capture_default_str();
    cmd->add_option("--batch-size", t.tc.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--max-epochs", t.tc.max_epochs, "epoch limit")->capture_default_str();
    cmd->add_option("--patience", t.tc.patience,
                    "non-improving epochs tolerated before stopping (0 disables)")
        ->capture_default_str();
    cmd->add_flag("--shuffle,!--no-shuffle", t.tc.shuffle, "shuffle record order every epoch");
    cmd->add_option("--init-range", t.tc.init_range, "half-width of the uniform weight init")
        ->capture_default_str();
    t.lr_decay_opt = cmd->add_option("--lr-decay", t.lr_decay,
                                     "learning-rate factor after non-improving epochs");
}

TrainConfig train_config(const TrainOptions& t) {
    TrainConfig tc = t.tc;
    tc.regime = parse_regime(t.regime);
    if (t.lr_decay_opt->count() > 0) tc.lr_decay = t.lr_decay;
    tc.validate();
    return tc;
}

struct NetOptions {
    std::string order = "NN(1,1+3)";
    std::string activations = "sigmoid/identity";
    std::vector<int> hidden;
    std::string hidden_rule = "table";
    int restarts = 5;
};

void add_net_options(CLI::App* cmd, NetOptions& n) {
    cmd->add_option("--order", n.order, "network order, e.g. NN(1,1+3)")->capture_default_str();
    cmd->add_option("--activations", n.activations, "hidden/output activation pair")
        ->capture_default_str();
    cmd->add_option("--hidden", n.hidden, "explicit hidden layer sizes, comma separated")
        ->delimiter(',');
    cmd->add_option("--hidden-rule", n.hidden_rule, "n, 2n+1 or table")->capture_default_str();
    cmd->add_option("--restarts", n.restarts, "random restarts")->capture_default_str();
}

std::size_t thread_count(int requested) {
    return requested < 0 ? default_thread_count() : static_cast<std::size_t>(requested);
}

// One network fitted through the search machinery so it gets the same
// restart, scoring and test-window handling.
FitReport fit_single_net(const NetOptions& n, const TrainConfig& tc, std::uint64_t seed,
                         std::size_t threads, const SplitResult& split, std::ostream& err) {
    SearchSpec spec;
    const auto order = parse_order(n.order);
    spec.orders = {order};
    spec.activations = {parse_activation_pair(n.activations)};
    spec.hidden_rule = parse_hidden_rule(n.hidden_rule);
    if (!n.hidden.empty()) spec.explicit_hidden[order.render()] = n.hidden;
    spec.restarts = n.restarts;
    spec.base_seed = seed;
    spec.train = tc;
    spec.threads = threads;
    auto board = run_search(spec, split.train, split.test);
    if (board.rows.empty()) {
        for (const auto& s : board.skipped) err << "  " << s.order << ' ' << s.activations << ": " << s.reason << '\n';
        throw FitFailure("network " + order.render() + " could not be fitted");
    }
    return std::move(board.rows.front());
}

std::vector<std::vector<double>> exog_values(const TimeSeries& s, std::size_t count) {
    std::vector<std::vector<double>> out;
    for (std::size_t m = 0; m < count; ++m) out.push_back(s.exog(m).values);
    return out;
}

// Header "t,actual,<names...>", one row per forecast step; t counts
// observations from 1 across the whole series.
std::string forecast_csv(std::size_t first_t, const std::vector<double>& actual,
                         const std::vector<std::string>& names,
                         const std::vector<std::vector<double>>& preds, std::size_t rows) {
    std::ostringstream out;
    out << "t,actual";
    for (const auto& n : names) out << ',' << csv_field(n);
    out << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        out << first_t + i << ',' << (i < actual.size() ? format_number(actual[i]) : "");
        for (const auto& p : preds) out << ',' << format_number(p[i]);
        out << '\n';
    }
    return out.str();
}

json report_summary(const FitReport& r) {
    json j = to_json(r);
    j.erase("network");
    j.erase("trace");
    return j;
}

void print_report(std::ostream& out, const FitReport& r) {
    out << r.order << ' ' << r.activations << "  hidden";
    for (int h : r.hidden) out << ' ' << h;
    out << "  params " << r.n_params << "  R2 " << format_number(r.r_squared) << "  SSE train "
        << format_number(r.sse_train);
    if (r.sse_test_onestep) out << "  SSE test " << format_number(*r.sse_test_onestep);
    out << "  seed " << r.seed << '\n';
}

ArimaSpec arima_spec(const std::string& orders, bool no_intercept, std::size_t exog_count) {
    ArimaSpec spec = parse_arima_orders(orders);
    spec.intercept = !no_intercept;
    spec.exog_count = exog_count;
    spec.validate();
    return spec;
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
    std::string kind = "ar";
    double c = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma = 1.0;
    double upper_c = 0.0;
    std::vector<double> upper_phi;
    double threshold = 0.0;
    double exog_beta = 0.0;
    CLI::Option* exog_beta_opt = nullptr;
    double exog_mean = 5.0;
    std::string exog_name = "x";
    std::string name = "y";
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string out_dir = ".";
};

GeneratorSpec generator_spec(const SimulateOptions& o) {
    GeneratorSpec g;
    if (o.kind == "ar" || o.kind == "ar1") {
        g.kind = GeneratorSpec::Kind::ar;
        if (o.kind == "ar1" && o.phi.size() != 1) {
            throw ValidationError("--kind ar1 needs exactly one --phi coefficient");
        }
    } else if (o.kind == "arma") {
        g.kind = GeneratorSpec::Kind::arma;
    } else if (o.kind == "tar" || o.kind == "threshold-ar") {
        g.kind = GeneratorSpec::Kind::threshold_ar;
    } else {
        throw ValidationError("unknown --kind '" + o.kind + "' (expected ar, ar1, arma or tar)");
    }
    g.intercept = o.c;
    g.ar = o.phi;
    g.ma = o.theta;
    g.sigma = o.sigma;
    g.upper_intercept = o.upper_c;
    g.upper_ar = o.upper_phi;
    g.threshold = o.threshold;
    if (o.exog_beta_opt->count() > 0) g.exog_beta = o.exog_beta;
    g.exog_mean = o.exog_mean;
    g.exog_name = o.exog_name;
    if (g.exog_name == o.name || g.exog_name == "t" || o.name == "t") {
        throw ValidationError("column names must differ from each other and from 't'");
    }
    return g;
}

json generator_json(const GeneratorSpec& g, const std::string& kind) {
    json j{{"kind", kind}, {"c", g.intercept}, {"phi", g.ar}, {"sigma", g.sigma}};
    if (g.kind == GeneratorSpec::Kind::arma) j["theta"] = g.ma;
    if (g.kind == GeneratorSpec::Kind::threshold_ar) {
        j["upper_c"] = g.upper_intercept;
        j["upper_phi"] = g.upper_ar;
        j["threshold"] = g.threshold;
    }
    if (g.exog_beta) {
        j["exog_beta"] = *g.exog_beta;
        j["exog_mean"] = g.exog_mean;
        j["exog_name"] = g.exog_name;
    }
    j["burn_in"] = simulation_burn_in;
    return j;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    const auto g = generator_spec(o);
    const auto series = simulate(g, o.n, o.seed, o.name);

    std::ostringstream csv;
    csv << "t," << csv_field(o.name);
    if (g.exog_beta) csv << ',' << csv_field(g.exog_name);
    csv << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        csv << i + 1 << ',' << format_number(series.values()[i]);
        if (g.exog_beta) csv << ',' << format_number(series.exog(0).values[i]);
        csv << '\n';
    }

    const fs::path path = o.out.empty() ? fs::path(o.out_dir) / "simulated.csv" : fs::path(o.out);
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    const json manifest{{"kind", "lagnet.simulation"},
                        {"csv", path.filename().string()},
                        {"n", o.n},
                        {"seed", o.seed},
                        {"target", o.name},
                        {"generator", generator_json(g, o.kind)}};

    OutputSet files;
    files.write(path, csv.str());
    files.write(sidecar, dump(manifest));
    files.commit();
    out << "wrote " << path.string() << " (" << series.size() << " rows)\n";
    out << "seed: " << o.seed << '\n';
    return exit_ok;
}

// ---- search ----------------------------------------------------------------

struct SearchOptions {
    DataOptions data;
    TrainOptions train;
    std::string orders;
    std::string contiguous;
    std::vector<int> layers{1};
    std::string hidden_rule = "table";
    std::vector<std::string> hidden;
    std::string activations = "sigmoid/identity";
    int restarts = 5;
    std::string criterion = "test_sse";
    std::uint64_t seed = 0;
    int threads = -1;
    std::string out_dir = ".";
};

std::pair<int, int> parse_range(const std::string& text) {
    const auto dash = text.find('-');
    try {
        if (dash == std::string::npos) throw std::invalid_argument(text);
        std::size_t used = 0;
        const int lo = std::stoi(text.substr(0, dash), &used);
        if (used != dash) throw std::invalid_argument(text);
        const auto rest = text.substr(dash + 1);
        const int hi = std::stoi(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ValidationError("--contiguous expects lo-hi, got '" + text + "'");
    }
}

// "NN(2,1-4)=3:2" -> explicit hidden sizes for that order.
std::pair<std::string, std::vector<int>> parse_hidden_entry(const std::string& text) {
    const auto eq = text.rfind('=');
    if (eq == std::string::npos) {
        throw ValidationError("--hidden entries look like ORDER=SIZE[:SIZE], got '" + text + "'");
    }
    const auto order = parse_order(text.substr(0, eq)).render();
    std::vector<int> sizes;
    std::stringstream ss(text.substr(eq + 1));
    std::string part;
    while (std::getline(ss, part, ':')) {
        try {
            std::size_t used = 0;
            sizes.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw ValidationError("bad hidden size '" + part + "' in '" + text + "'");
        }
    }
    if (sizes.empty()) throw ValidationError("no hidden sizes in '" + text + "'");
    return {order, sizes};
}

std::vector<ActivationPair> parse_activation_list(const std::string& text) {
    std::vector<ActivationPair> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(parse_activation_pair(part));
    }
    if (out.empty()) throw ValidationError("no activation pairs given");
    return out;
}

int cmd_search(const SearchOptions& o, std::ostream& out, std::ostream& err) {
    SearchSpec spec;
    if (!o.orders.empty()) spec.orders = parse_order_list(o.orders);
    if (!o.contiguous.empty()) spec.contiguous = parse_range(o.contiguous);
    if (spec.orders.empty() && !spec.contiguous) {
        throw ValidationError("give --orders and/or --contiguous");
    }
    spec.layer_options = o.layers;
    spec.hidden_rule = parse_hidden_rule(o.hidden_rule);
    for (const auto& h : o.hidden) spec.explicit_hidden.insert(parse_hidden_entry(h));
    spec.activations = parse_activation_list(o.activations);
    spec.restarts = o.restarts;
    spec.base_seed = o.seed;
    spec.train = train_config(o.train);
    spec.criterion = parse_criterion(o.criterion);
    spec.threads = thread_count(o.threads);
    spec.candidates();

    const auto series = load_data(o.data);
    const auto split = split_data(series, o.data, err);
    auto board = run_search(spec, split.train, split.test);

    for (const auto& s : board.skipped) {
        err << "skipped " << s.order << ' ' << s.activations << ": " << s.reason << '\n';
    }
    if (board.rows.empty()) throw FitFailure("no candidate could be fitted");

    json report = to_json(board);
    json run = data_json(o.data, split.train.size());
    run["command"] = "search";
    run["seed"] = o.seed;
    run["restarts"] = o.restarts;
    run["hidden_rule"] = o.hidden_rule;
    run["activations"] = o.activations;
    json orders = json::array();
    for (const auto& c : spec.candidates()) orders.push_back(c.order.render());
    run["candidates"] = orders;
    run["train_config"] = to_json(spec.train);
    report["run"] = run;

    const fs::path dir(o.out_dir);
    OutputSet files;
    files.write(dir / "leaderboard.csv", leaderboard_csv(board));
    files.write(dir / "report.json", dump(report));
    files.commit();

    out << "criterion: " << to_string(board.criterion) << '\n';
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        out << i + 1 << ". ";
        print_report(out, board.rows[i]);
    }
    out << "winner: " << board.rows.front().order << ' ' << board.rows.front().activations << '\n';
    return exit_ok;
}

// ---- fit-nn ----------------------------------------------------------------

struct FitNetOptions {
    DataOptions data;
    TrainOptions train;
    NetOptions net;
    std::uint64_t seed = 0;
    int threads = -1;
    bool plot = false;
    std::string out_dir = ".";
};

int cmd_fit_nn(const FitNetOptions& o, std::ostream& out, std::ostream& err) {
    const auto tc = train_config(o.train);
    const auto series = load_data(o.data);
    const auto split = split_data(series, o.data, err);
    const auto report = fit_single_net(o.net, tc, o.seed, thread_count(o.threads), split, err);

    json model = to_json(report.net);
    json run = data_json(o.data, split.train.size());
    run["command"] = "fit-nn";
    run["seed"] = o.seed;
    run["restarts"] = o.net.restarts;
    run["train_config"] = to_json(tc);
    model["run"] = run;
    model["report"] = report_summary(report);

    const fs::path dir(o.out_dir);
    OutputSet files;
    files.write(dir / "model.json", dump(model));
    if (split.test) {
        const auto& actual = split.test->values();
        const auto ex = exog_values(*split.test, report.net.config.exog_count);
        const auto one = forecast(report.net, split.train, actual.size(), ForecastMode::one_step,
                                  actual, ex);
        const auto it =
            forecast(report.net, split.train, actual.size(), ForecastMode::iterated, {}, ex);
        const std::size_t t0 = split.train.size() + 1;
        files.write(dir / "forecast.csv", forecast_csv(t0, actual, {"pred"}, {one}, one.size()));
        files.write(dir / "forecast_iterated.csv",
                    forecast_csv(t0, actual, {"pred"}, {it}, it.size()));
        if (o.plot) {
            PlotSpec ps;
            ps.actual = actual;
            ps.predicted = {one};
            ps.predicted_labels = {report.order};
            ps.title = "one-step forecasts";
            files.write(dir / "plot.svg", render_svg(ps));
        }
    } else if (o.plot) {
        err << "warning: --plot needs a test window; no plot written\n";
    }
    files.commit();
    print_report(out, report);
    return exit_ok;
}

// ---- fit-arima -------------------------------------------------------------

struct FitArimaOptions {
    DataOptions data;
    std::string arimax = "2,1,1";
    bool no_intercept = false;
    bool plot = false;
    std::string out_dir = ".";
};

void print_arima(std::ostream& out, const ArimaFit& fit) {
    out << fit.spec.label() << "  c " << format_number(fit.params.intercept);
    for (std::size_t i = 0; i < fit.params.ar.size(); ++i) {
        out << "  ar" << i + 1 << ' ' << format_number(fit.params.ar[i]);
    }
    for (std::size_t i = 0; i < fit.params.ma.size(); ++i) {
        out << "  ma" << i + 1 << ' ' << format_number(fit.params.ma[i]);
    }
    for (std::size_t i = 0; i < fit.params.exog.size(); ++i) {
        out << "  x" << i + 1 << ' ' << format_number(fit.params.exog[i]);
    }
    out << "  R2 " << format_number(fit.r_squared) << "  SSE " << format_number(fit.sse) << '\n';
}

int cmd_fit_arima(const FitArimaOptions& o, std::ostream& out, std::ostream& err) {
    const auto series = load_data(o.data);
    const auto spec = arima_spec(o.arimax, o.no_intercept, series.exog_count());
    const auto split = split_data(series, o.data, err);
    const auto fit = fit_css(spec, split.train);
    for (const auto& w : fit.warnings) err << "warning: " << w << '\n';

    json model = to_json(fit);
    json run = data_json(o.data, split.train.size());
    run["command"] = "fit-arima";
    run["seed"] = 0;
    model["run"] = run;

    const fs::path dir(o.out_dir);
    OutputSet files;
    if (split.test) {
        const auto& actual = split.test->values();
        const auto ex = exog_values(*split.test, spec.exog_count);
        const auto one =
            forecast_arima(fit, split.train, actual.size(), ForecastMode::one_step, actual, ex);
        const auto it =
            forecast_arima(fit, split.train, actual.size(), ForecastMode::iterated, {}, ex);
        model["sse_test_onestep"] = sse(actual, one);
        model["sse_test_iterated"] = sse(actual, it);
        const std::size_t t0 = split.train.size() + 1;
        files.write(dir / "forecast.csv", forecast_csv(t0, actual, {"pred"}, {one}, one.size()));
        files.write(dir / "forecast_iterated.csv",
                    forecast_csv(t0, actual, {"pred"}, {it}, it.size()));
        if (o.plot) {
            PlotSpec ps;
            ps.actual = actual;
            ps.predicted = {one};
            ps.predicted_labels = {spec.label()};
            ps.title = "one-step forecasts";
            files.write(dir / "plot.svg", render_svg(ps));
        }
    }
    files.write(dir / "model.json", dump(model));
    files.commit();
    print_arima(out, fit);
    return exit_ok;
}

// ---- forecast --------------------------------------------------------------

struct ForecastOptions {
    DataOptions data;
    std::string model;
    std::string mode = "one-step";
    std::size_t horizon = 0;
    CLI::Option* horizon_opt = nullptr;
    std::string out_dir = ".";
};

int cmd_forecast(const ForecastOptions& o, std::ostream& out, std::ostream& err) {
    ForecastMode mode;
    if (o.mode == "one-step") {
        mode = ForecastMode::one_step;
    } else if (o.mode == "iterated") {
        mode = ForecastMode::iterated;
    } else {
        throw ValidationError("--mode must be one-step or iterated");
    }
    json doc;
    {
        std::ifstream f(o.model);
        try {
            doc = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ValidationError("model file is not valid JSON: " + std::string(e.what()));
        }
    }
    const auto kind = doc.value("kind", std::string());
    if (kind != "lagnet.nn" && kind != "lagnet.arima") {
        throw ValidationError("'" + o.model + "' is not a saved network or ARIMA model");
    }

    const auto series = load_data(o.data);
    const auto split = split_data(series, o.data, err);
    const std::size_t available = split.test ? split.test->size() : 0;
    const std::size_t horizon = o.horizon_opt->count() > 0 ? o.horizon : available;
    if (mode == ForecastMode::one_step && horizon > available) {
        throw ValidationError("one-step forecasts need observed values for all " +
                              std::to_string(horizon) + " steps; only " +
                              std::to_string(available) + " follow the history");
    }
    std::vector<double> actual;
    std::vector<std::vector<double>> ex(series.exog_count());
    if (split.test) {
        const auto& tv = split.test->values();
        actual.assign(tv.begin(), tv.begin() + std::min(horizon, tv.size()));
        for (std::size_t m = 0; m < ex.size(); ++m) ex[m] = split.test->exog(m).values;
    }

    std::vector<double> pred;
    std::string label;
    std::uint64_t seed = 0;
    if (kind == "lagnet.nn") {
        const auto net = trained_net_from_json(doc);
        if (series.exog_count() < net.config.exog_count) {
            throw ValidationError("the model expects " + std::to_string(net.config.exog_count) +
                                  " exogenous column(s); pass them with --exog");
        }
        ex.resize(net.config.exog_count);
        pred = forecast(net, split.train, horizon, mode, actual, ex);
        label = OrderNotation{static_cast<int>(net.config.hidden.size()), net.config.lags}.render();
        seed = net.seed;
    } else {
        const auto fit = arima_fit_from_json(doc);
        if (series.exog_count() < fit.spec.exog_count) {
            throw ValidationError("the model expects " + std::to_string(fit.spec.exog_count) +
                                  " exogenous column(s); pass them with --exog");
        }
        ex.resize(fit.spec.exog_count);
        pred = forecast_arima(fit, split.train, horizon, mode, actual, ex);
        label = fit.spec.label();
    }

    const fs::path dir(o.out_dir);
    const fs::path csv = dir / (mode == ForecastMode::one_step ? "forecast.csv"
                                                                : "forecast_iterated.csv");
    json manifest = data_json(o.data, split.train.size());
    manifest["command"] = "forecast";
    manifest["model"] = o.model;
    manifest["model_kind"] = kind;
    manifest["mode"] = std::string(to_string(mode));
    manifest["horizon"] = horizon;
    manifest["seed"] = seed;
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");

    OutputSet files;
    files.write(csv, forecast_csv(split.train.size() + 1, actual, {"pred"}, {pred}, pred.size()));
    files.write(sidecar, dump(manifest));
    files.commit();
    out << "wrote " << pred.size() << ' ' << to_string(mode) << " forecasts from " << label
        << " to " << csv.string() << '\n';
    if (!actual.empty() && actual.size() == pred.size()) {
        out << "SSE " << format_number(sse(actual, pred)) << '\n';
    }
    return exit_ok;
}

// ---- compare ---------------------------------------------------------------

struct CompareOptions {
    DataOptions data;
    TrainOptions train;
    NetOptions net;
    std::string arimax = "2,1,1";
    bool no_intercept = false;
    std::uint64_t seed = 0;
    int threads = -1;
    std::size_t horizon = 0;
    CLI::Option* horizon_opt = nullptr;
    bool plot = false;
    std::size_t window = 0;
    CLI::Option* window_opt = nullptr;
    std::string out_dir = ".";
};

json row_json(const ComparisonRow& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"model_kind", to_string(r.kind)},
                {"order", r.label},
                {"activations", r.activations},
                {"n_params", r.n_params},
                {"r_squared", r.metrics.r_squared},
                {"sse_train", r.metrics.sse_train},
                {"sse_test_onestep", r.metrics.sse_test},
                {"sse_test_iterated", opt(r.sse_test_iterated)},
                {"bic", opt(r.bic)},
                {"seed", r.seed},
                {"test_start", r.test_start},
                {"test_length", r.test_length}};
}

int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
    const auto tc = train_config(o.train);
    const auto series = load_data(o.data);
    const auto aspec = arima_spec(o.arimax, o.no_intercept, series.exog_count());
    parse_order(o.net.order);
    const auto split = split_data(series, o.data, err);
    if (!split.test) throw ValidationError("compare needs a test window: --train must be below the series length");
    const auto& actual = split.test->values();
    const std::size_t horizon = o.horizon_opt->count() > 0 ? o.horizon : actual.size();
    if (horizon > actual.size()) {
        throw ValidationError("--horizon " + std::to_string(horizon) + " exceeds the test window (" +
                              std::to_string(actual.size()) + ")");
    }
    const std::size_t window = o.window_opt->count() > 0 ? o.window : horizon;
    if (o.plot && (window < 1 || window > horizon)) {
        throw ValidationError("--window must lie in 1.." + std::to_string(horizon));
    }

    const auto report = fit_single_net(o.net, tc, o.seed, thread_count(o.threads), split, err);
    const auto fit = fit_css(aspec, split.train);
    for (const auto& w : fit.warnings) err << "warning: " << w << '\n';

    const auto nn_ex = exog_values(*split.test, report.net.config.exog_count);
    const auto ar_ex = exog_values(*split.test, aspec.exog_count);
    const std::size_t n_test = actual.size();
    const auto nn_one = forecast(report.net, split.train, n_test, ForecastMode::one_step, actual, nn_ex);
    const auto nn_it = forecast(report.net, split.train, n_test, ForecastMode::iterated, {}, nn_ex);
    const auto ar_one = forecast_arima(fit, split.train, n_test, ForecastMode::one_step, actual, ar_ex);
    const auto ar_it = forecast_arima(fit, split.train, n_test, ForecastMode::iterated, {}, ar_ex);

    const std::size_t t0 = split.train.size();
    const auto table = compare({comparison_row(report, t0, n_test),
                                comparison_row(fit, sse(actual, ar_one), sse(actual, ar_it), t0, n_test)});

    json rows = json::array();
    for (const auto& r : table.rows) rows.push_back(row_json(r));
    json run = data_json(o.data, split.train.size());
    run["command"] = "compare";
    run["seed"] = o.seed;
    run["order"] = report.order;
    run["activations"] = report.activations;
    run["restarts"] = o.net.restarts;
    run["arimax"] = aspec.label();
    run["horizon"] = horizon;
    run["train_config"] = to_json(tc);
    const json doc{{"run", run},
                   {"rows", rows},
                   {"winner", table.winner_row().label},
                   {"models", {{"nn", to_json(report)}, {"arimax", to_json(fit)}}}};

    const std::vector<std::string> names{"pred_nn", "pred_arimax"};
    const std::vector<double> head(actual.begin(), actual.begin() + horizon);
    const fs::path dir(o.out_dir);
    OutputSet files;
    files.write(dir / "comparison.csv", render_csv(table));
    files.write(dir / "comparison.json", dump(doc));
    files.write(dir / "forecast.csv", forecast_csv(t0 + 1, head, names, {nn_one, ar_one}, horizon));
    files.write(dir / "forecast_iterated.csv",
                forecast_csv(t0 + 1, head, names, {nn_it, ar_it}, horizon));
    if (o.plot) {
        PlotSpec ps;
        ps.actual.assign(actual.begin(), actual.begin() + window);
        ps.predicted = {std::vector<double>(nn_one.begin(), nn_one.begin() + window),
                        std::vector<double>(ar_one.begin(), ar_one.begin() + window)};
        ps.predicted_labels = {report.order, aspec.label()};
        ps.title = "one-step forecasts over " + std::to_string(window) + " test observations";
        files.write(dir / "plot.svg", render_svg(ps));
    }
    files.commit();
    out << render_text(table);
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lag-set neural network and ARIMAX forecasting", "lagnet"};
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.set_config("--config", "", "JSON file with option values (flags take precedence)");
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    SimulateOptions sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic series as CSV");
    simulate_cmd->add_option("--kind", sim.kind, "ar, ar1, arma or tar")->capture_default_str();
    simulate_cmd->add_option("--c", sim.c, "intercept (lower regime for tar)");
    simulate_cmd->add_option("--phi", sim.phi, "AR coefficients, comma separated")->delimiter(',');
    simulate_cmd->add_option("--theta", sim.theta, "MA coefficients (arma)")->delimiter(',');
    simulate_cmd->add_option("--sigma", sim.sigma, "shock standard deviation")->capture_default_str();
    simulate_cmd->add_option("--upper-c", sim.upper_c, "upper-regime intercept (tar)");
    simulate_cmd->add_option("--upper-phi", sim.upper_phi, "upper-regime AR coefficients (tar)")
        ->delimiter(',');
    simulate_cmd->add_option("--threshold", sim.threshold, "regime threshold on y[t-1] (tar)");
    sim.exog_beta_opt = simulate_cmd->add_option("--exog-beta", sim.exog_beta,
                                                 "effect of a Poisson covariate (adds a column)");
    simulate_cmd->add_option("--exog-mean", sim.exog_mean, "Poisson mean of the covariate")
        ->capture_default_str();
    simulate_cmd->add_option("--exog-name", sim.exog_name, "covariate column name")
        ->capture_default_str();
    simulate_cmd->add_option("--name", sim.name, "target column name")->capture_default_str();
    simulate_cmd->add_option("--n", sim.n, "number of observations")->required();
    simulate_cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
    simulate_cmd->add_option("--out", sim.out, "output CSV path");
    simulate_cmd->add_option("--out-dir", sim.out_dir, "directory for simulated.csv when --out is absent");

    SearchOptions srch;
    auto* search_cmd = app.add_subcommand("search", "rank candidate network orders");
    add_data_options(search_cmd, srch.data, true);
    add_train_options(search_cmd, srch.train);
    search_cmd->add_option("--orders", srch.orders, "candidate orders, e.g. \"NN(1,1+2),NN(1,1-3)\"");
    search_cmd->add_option("--contiguous", srch.contiguous, "add NN(L,1-p) for p in lo-hi");
    search_cmd->add_option("--layers", srch.layers, "layer counts for --contiguous")->delimiter(',');
    search_cmd->add_option("--hidden-rule", srch.hidden_rule, "n, 2n+1 or table")
        ->capture_default_str();
    search_cmd->add_option("--hidden", srch.hidden, "explicit sizes, e.g. NN(2,1-4)=3:2");
    search_cmd->add_option("--activations", srch.activations,
                           "hidden/output pairs, comma separated")
        ->capture_default_str();
    search_cmd->add_option("--restarts", srch.restarts, "random restarts per candidate")
        ->capture_default_str();
    search_cmd->add_option("--criterion", srch.criterion, "test_sse or bic")->capture_default_str();
    search_cmd->add_option("--seed", srch.seed, "base seed")->capture_default_str();
    search_cmd->add_option("--threads", srch.threads, "worker threads (0 = serial)");
    search_cmd->add_option("--out-dir", srch.out_dir, "output directory")->capture_default_str();

    FitNetOptions fnn;
    auto* fit_nn_cmd = app.add_subcommand("fit-nn", "fit one network order");
    add_data_options(fit_nn_cmd, fnn.data, false);
    add_train_options(fit_nn_cmd, fnn.train);
    add_net_options(fit_nn_cmd, fnn.net);
    fit_nn_cmd->add_option("--seed", fnn.seed, "base seed")->capture_default_str();
    fit_nn_cmd->add_option("--threads", fnn.threads, "worker threads (0 = serial)");
    fit_nn_cmd->add_flag("--plot", fnn.plot, "write plot.svg of the test window");
    fit_nn_cmd->add_option("--out-dir", fnn.out_dir, "output directory")->capture_default_str();

    FitArimaOptions far;
    auto* fit_arima_cmd = app.add_subcommand("fit-arima", "fit an ARIMA/ARIMAX model by CSS");
    add_data_options(fit_arima_cmd, far.data, false);
    fit_arima_cmd->add_option("--arimax,--orders", far.arimax, "p,d,q")->capture_default_str();
    fit_arima_cmd->add_flag("--no-intercept", far.no_intercept, "omit the constant term");
    fit_arima_cmd->add_flag("--plot", far.plot, "write plot.svg of the test window");
    // Accepted for a uniform flag set; CSS fitting is deterministic.
    std::uint64_t unused_seed = 0;
    fit_arima_cmd->add_option("--seed", unused_seed, "ignored");
    fit_arima_cmd->add_option("--out-dir", far.out_dir, "output directory")->capture_default_str();

    ForecastOptions fc;
    auto* forecast_cmd = app.add_subcommand("forecast", "forecast with a saved model");
    add_data_options(forecast_cmd, fc.data, false);
    forecast_cmd->add_option("--model", fc.model, "model.json from fit-nn or fit-arima")
        ->required()
        ->check(CLI::ExistingFile);
    forecast_cmd->add_option("--mode", fc.mode, "one-step or iterated")->capture_default_str();
    fc.horizon_opt = forecast_cmd->add_option("--horizon", fc.horizon,
                                              "steps after the history (default: rest of series)");
    forecast_cmd->add_option("--out-dir", fc.out_dir, "output directory")->capture_default_str();

    CompareOptions cmp;
    auto* compare_cmd = app.add_subcommand("compare", "network versus ARIMAX on the test window");
    add_data_options(compare_cmd, cmp.data, true);
    add_train_options(compare_cmd, cmp.train);
    add_net_options(compare_cmd, cmp.net);
    compare_cmd->add_option("--arimax", cmp.arimax, "ARIMAX orders p,d,q")->capture_default_str();
    compare_cmd->add_flag("--no-intercept", cmp.no_intercept, "omit the ARIMAX constant");
    compare_cmd->add_option("--seed", cmp.seed, "base seed")->capture_default_str();
    compare_cmd->add_option("--threads", cmp.threads, "worker threads (0 = serial)");
    cmp.horizon_opt = compare_cmd->add_option("--horizon", cmp.horizon,
                                              "forecast rows written (default: test length)");
    compare_cmd->add_flag("--plot", cmp.plot, "write plot.svg");
    cmp.window_opt = compare_cmd->add_option("--window", cmp.window,
                                             "observations shown in the plot (default: horizon)");
    compare_cmd->add_option("--out-dir", cmp.out_dir, "output directory")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(sim, out);
        if (search_cmd->parsed()) return cmd_search(srch, out, err);
        if (fit_nn_cmd->parsed()) return cmd_fit_nn(fnn, out, err);
        if (fit_arima_cmd->parsed()) return cmd_fit_arima(far, out, err);
        if (forecast_cmd->parsed()) return cmd_forecast(fc, out, err);
        if (compare_cmd->parsed()) return cmd_compare(cmp, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace lagnet
