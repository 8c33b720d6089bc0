#include "lagnet/select.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "lagnet/error.hpp"

namespace lagnet {

namespace {

class OrderParser {
public:
    explicit OrderParser(std::string_view text) : text_(text) {}

    OrderNotation parse() {
        expect("NN");
        expect("(");
        const int layers = integer();
        if (layers < 1) fail("layer count must be positive");
        expect(",");
        std::vector<int> lags;
        std::set<int> seen;
        auto add = [&](int v) {
            if (!seen.insert(v).second) fail("lag " + std::to_string(v) + " repeated");
            lags.push_back(v);
        };
        skip_ws();
        if (peek() == ')') fail("empty lag specification");
        for (;;) {
            const int a = integer();
            if (a < 1) fail("lags must be positive");
            skip_ws();
            if (peek() == '-') {
                ++pos_;
                const int b = integer();
                if (b <= a) {
                    fail("range " + std::to_string(a) + "-" + std::to_string(b) +
                         " must be ascending");
                }
                for (int v = a; v <= b; ++v) add(v);
            } else {
                add(a);
            }
            skip_ws();
            if (peek() == '+') {
                ++pos_;
                continue;
            }
            break;
        }
        expect(")");
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
        return {layers, LagSpec(std::move(lags))};
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ValidationError("malformed order '" + std::string(text_) + "': " + why);
    }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void expect(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) != tok) fail("expected '" + std::string(tok) + "'");
        pos_ += tok.size();
    }
    int integer() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) fail("expected an integer");
        if (pos_ - start > 6) fail("integer too large");
        return std::stoi(std::string(text_.substr(start, pos_ - start)));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string render_lags(const LagSpec& lags) {
    const auto& v = lags.lags();
    std::string out;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[j] + 1) ++j;
        auto append = [&](const std::string& s) {
            if (!out.empty()) out += '+';
            out += s;
        };
        if (j - i >= 2) {
            append(std::to_string(v[i]) + "-" + std::to_string(v[j]));
        } else {
            for (std::size_t m = i; m <= j; ++m) append(std::to_string(v[m]));
        }
        i = j + 1;
    }
    return out;
}

std::string OrderNotation::render() const {
    return "NN(" + std::to_string(layers) + "," + render_lags(lags) + ")";
}

OrderNotation parse_order(std::string_view text) { return OrderParser(text).parse(); }

std::vector<OrderNotation> parse_order_list(std::string_view text) {
    // Commas separate orders only outside parentheses.
    std::vector<OrderNotation> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        const char ch = i < text.size() ? text[i] : ',';
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            auto item = text.substr(start, i - start);
            if (item.find_first_not_of(" \t") == std::string_view::npos) {
                if (i < text.size() || !out.empty()) {
                    throw ValidationError("empty entry in order list '" + std::string(text) + "'");
                }
            } else {
                out.push_back(parse_order(item));
            }
            start = i + 1;
        }
    }
    if (out.empty()) throw ValidationError("no network orders given");
    return out;
}

std::string_view to_string(HiddenRule r) {
    switch (r) {
        case HiddenRule::explicit_sizes:
            return "explicit";
        case HiddenRule::heuristic_n:
            return "n";
        case HiddenRule::heuristic_2n_plus_1:
            return "2n+1";
        case HiddenRule::tabulated:
            return "table";
    }
    return "?";
}

HiddenRule parse_hidden_rule(std::string_view name) {
    if (name == "explicit") return HiddenRule::explicit_sizes;
    if (name == "n") return HiddenRule::heuristic_n;
    if (name == "2n+1") return HiddenRule::heuristic_2n_plus_1;
    if (name == "table") return HiddenRule::tabulated;
    throw ValidationError("unknown hidden-size rule '" + std::string(name) +
                          "' (expected n, 2n+1, table or explicit)");
}

int hidden_size(std::size_t k, HiddenRule rule) {
    if (k < 1) throw ValidationError("input count must be >= 1");
    const int n = static_cast<int>(k);
    switch (rule) {
        case HiddenRule::heuristic_n:
            return n;
        case HiddenRule::heuristic_2n_plus_1:
            return 2 * n + 1;
        default:
            break;
    }
    throw ValidationError("hidden_size takes a heuristic rule");
}

std::vector<int> hidden_layers(std::size_t k, int layers, HiddenRule rule) {
    if (layers < 1) throw ValidationError("layer count must be >= 1");
    int first = 0;
    int second = 0;
    switch (rule) {
        case HiddenRule::heuristic_n:
        case HiddenRule::heuristic_2n_plus_1:
            first = second = hidden_size(k, rule);
            break;
        case HiddenRule::tabulated: {
            static const std::map<std::size_t, int> table{{3, 2}, {4, 3}, {5, 3}, {6, 4},
                                                          {7, 4}, {8, 7}, {9, 7}};
            auto it = table.find(k);
            if (it == table.end()) {
                throw ValidationError("no tabulated hidden size for " + std::to_string(k) +
                                      " inputs (table covers 3..9)");
            }
            first = it->second;
            second = std::max(1, first - 1);
            break;
        }
        case HiddenRule::explicit_sizes:
            throw ValidationError("explicit hidden sizes must be supplied per candidate");
    }
    std::vector<int> sizes{first};
    for (int l = 1; l < layers; ++l) sizes.push_back(second);
    return sizes;
}

double bic(std::size_t n_obs, double sse, std::size_t n_params) {
    if (n_obs < 1) throw ValidationError("BIC needs at least one observation");
    if (!(sse >= 0.0) || !std::isfinite(sse)) throw ValidationError("BIC needs a finite SSE >= 0");
    if (sse == 0.0) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(n_obs);
    return n * std::log(sse / n) + static_cast<double>(n_params) * std::log(n);
}

RestartOutcome multi_restart_fit(const NetConfig& config, const DesignMatrix& data,
                                 const TrainConfig& tc, int restarts,
                                 std::uint64_t base_seed, std::size_t threads) {
    if (restarts < 1) throw ValidationError("restart count must be >= 1");
    const auto R = static_cast<std::size_t>(restarts);
    std::vector<std::optional<TrainedNet>> nets(R);
    std::vector<std::string> failures(R);
    parallel_for(R, threads, [&](std::size_t r) {
        TrainConfig local = tc;
        local.seed = base_seed + r;
        try {
            nets[r] = train(config, data, local);
        } catch (const DivergenceError& e) {
            failures[r] = e.what();
        }
    });

    RestartOutcome out;
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < R; ++r) {
        if (!nets[r]) {
            out.sses.push_back(std::nullopt);
            out.failures.push_back("seed " + std::to_string(base_seed + r) + ": " + failures[r]);
            continue;
        }
        const double sse = nets[r]->train_sse();
        out.sses.push_back(sse);
        if (!best || sse < nets[*best]->train_sse()) best = r;
    }
    if (!best) {
        throw DivergenceError("all " + std::to_string(R) + " restarts diverged; " +
                                  out.failures.front(),
                              std::numeric_limits<double>::infinity());
    }
    out.best = std::move(*nets[*best]);
    out.best_seed = base_seed + *best;
    return out;
}

std::string ActivationPair::label() const {
    return std::string(to_string(hidden)) + "/" + std::string(to_string(output));
}

ActivationPair parse_activation_pair(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        throw ValidationError("activation pair '" + std::string(text) +
                              "' must look like hidden/output");
    }
    return {parse_activation(text.substr(0, slash)), parse_activation(text.substr(slash + 1))};
}

std::string_view to_string(Criterion c) { return c == Criterion::bic ? "bic" : "test_sse"; }

Criterion parse_criterion(std::string_view name) {
    if (name == "bic" || name == "BIC") return Criterion::bic;
    if (name == "test_sse" || name == "test-sse" || name == "sse") return Criterion::test_sse;
    throw ValidationError("unknown criterion '" + std::string(name) + "'");
}

std::vector<Candidate> SearchSpec::candidates() const {
    std::vector<OrderNotation> orders_all = orders;
    if (contiguous) {
        if (contiguous->first < 1 || contiguous->second < contiguous->first) {
            throw ValidationError("contiguous lag range must satisfy 1 <= lo <= hi");
        }
        for (int layers : layer_options) {
            for (int p = contiguous->first; p <= contiguous->second; ++p) {
                orders_all.push_back({layers, LagSpec::contiguous(p)});
            }
        }
    }
    std::vector<Candidate> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& o : orders_all) {
        for (const auto& a : activations) {
            if (!seen.insert({o.render(), a.label()}).second) continue;
            Candidate c{o, a, {}};
            if (auto it = explicit_hidden.find(o.render()); it != explicit_hidden.end()) {
                c.hidden = it->second;
            }
            out.push_back(std::move(c));
        }
    }
    if (out.empty()) throw ValidationError("search has no candidates");
    return out;
}

NetConfig candidate_config(const Candidate& c, const SearchSpec& spec, std::size_t exog_count) {
    NetConfig cfg;
    cfg.lags = c.order.lags;
    cfg.exog_count = exog_count;
    cfg.hidden_activation = c.activations.hidden;
    cfg.output_activation = c.activations.output;
    if (!c.hidden.empty()) {
        if (static_cast<int>(c.hidden.size()) != c.order.layers) {
            throw ValidationError("explicit hidden sizes for " + c.order.render() +
                                  " do not match its layer count");
        }
        cfg.hidden = c.hidden;
    } else {
        cfg.hidden = hidden_layers(cfg.input_count(), c.order.layers, spec.hidden_rule);
    }
    cfg.validate();
    return cfg;
}

double Leaderboard::criterion_value(const FitReport& r) const {
    if (criterion == Criterion::test_sse && r.sse_test_onestep) return *r.sse_test_onestep;
    return r.bic;
}

void rank_reports(Leaderboard& board) {
    auto key = [&](const FitReport& r) {
        return std::make_tuple(board.criterion_value(r), r.n_params, r.sse_train,
                               std::cref(r.order), std::cref(r.activations));
    };
    std::stable_sort(board.rows.begin(), board.rows.end(),
                     [&](const FitReport& a, const FitReport& b) { return key(a) < key(b); });
    board.tie_break.clear();
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        if (i == 0) {
            board.tie_break.emplace_back("leader");
            continue;
        }
        const auto& a = board.rows[i - 1];
        const auto& b = board.rows[i];
        if (board.criterion_value(a) != board.criterion_value(b)) {
            board.tie_break.emplace_back("criterion");
        } else if (a.n_params != b.n_params) {
            board.tie_break.emplace_back("n_params");
        } else if (a.sse_train != b.sse_train) {
            board.tie_break.emplace_back("sse_train");
        } else if (a.order != b.order) {
            board.tie_break.emplace_back("order");
        } else {
            board.tie_break.emplace_back("activations");
        }
    }
}

namespace {

double total_sum_squares(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s;
}

double sum_sq_error(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

struct Prepared {
    Candidate candidate;
    NetConfig config;
    DesignMatrix data;
};

}  // namespace

Leaderboard run_search(const SearchSpec& spec, const TimeSeries& train,
                       const std::optional<TimeSeries>& test) {
    if (spec.restarts < 1) throw ValidationError("restart count must be >= 1");
    const std::size_t exog_count = spec.use_exog ? train.exog_count() : 0;
    if (test && test->exog_count() < exog_count) {
        throw ValidationError("test window lacks the exogenous channels used for training");
    }

    Leaderboard board;
    board.test_length = test ? test->size() : 0;
    board.criterion = test ? spec.criterion : Criterion::bic;

    std::vector<Prepared> prepared;
    for (const auto& c : spec.candidates()) {
        try {
            NetConfig cfg = candidate_config(c, spec, exog_count);
            DesignMatrix dm = build_design_matrix(train, cfg.lags, spec.use_exog);
            if (dm.rows() < 2) throw ValidationError("fewer than two training rows");
            prepared.push_back({c, std::move(cfg), std::move(dm)});
        } catch (const ValidationError& e) {
            board.skipped.push_back({c.order.render(), c.activations.label(), e.what()});
        }
    }

    const auto R = static_cast<std::size_t>(spec.restarts);
    std::vector<std::optional<TrainedNet>> nets(prepared.size() * R);
    std::vector<std::string> errors(prepared.size() * R);
    std::vector<double> seconds(prepared.size() * R, 0.0);
    parallel_for(nets.size(), spec.threads, [&](std::size_t job) {
        const auto& p = prepared[job / R];
        TrainConfig tc = spec.train;
        tc.seed = spec.base_seed + job % R;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            nets[job] = lagnet::train(p.config, p.data, tc);
        } catch (const std::exception& e) {
            errors[job] = e.what();
        }
        seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    std::vector<std::vector<double>> test_exog;
    if (test) {
        for (std::size_t m = 0; m < exog_count; ++m) test_exog.push_back(test->exog(m).values);
    }

    for (std::size_t ci = 0; ci < prepared.size(); ++ci) {
        const auto& p = prepared[ci];
        FitReport rep;
        rep.order = p.candidate.order.render();
        rep.activations = p.candidate.activations.label();
        rep.hidden = p.config.hidden;
        rep.n_params = count_parameters(p.config);
        rep.n_train_rows = p.data.rows();

        std::optional<std::size_t> best;
        std::string first_error;
        for (std::size_t r = 0; r < R; ++r) {
            const auto& net = nets[ci * R + r];
            rep.wall_seconds += seconds[ci * R + r];
            if (!net) {
                rep.restart_sses.push_back(std::nullopt);
                if (first_error.empty()) first_error = errors[ci * R + r];
                continue;
            }
            rep.restart_sses.push_back(net->train_sse());
            if (!best || net->train_sse() < nets[ci * R + *best]->train_sse()) best = r;
        }
        if (!best) {
            board.skipped.push_back({rep.order, rep.activations,
                                     "all restarts failed: " + first_error});
            continue;
        }
        rep.net = std::move(*nets[ci * R + *best]);
        rep.seed = spec.base_seed + *best;
        rep.epochs = rep.net.epochs;
        rep.stop = rep.net.stop;
        rep.sse_train = rep.net.train_sse();
        const double sst = total_sum_squares(p.data.targets);
        rep.r_squared = sst > 0.0 ? 1.0 - rep.sse_train / sst
                                  : -std::numeric_limits<double>::infinity();
        rep.bic = bic(p.data.rows(), rep.sse_train, rep.n_params);
        if (test) {
            const auto& actual = test->values();
            const auto one = forecast(rep.net, train, actual.size(), ForecastMode::one_step,
                                      actual, test_exog);
            const auto it = forecast(rep.net, train, actual.size(), ForecastMode::iterated, {},
                                     test_exog);
            rep.sse_test_onestep = sum_sq_error(actual, one);
            rep.sse_test_iterated = sum_sq_error(actual, it);
        }
        board.rows.push_back(std::move(rep));
    }
    rank_reports(board);
    return board;
}

}  // namespace lagnet
