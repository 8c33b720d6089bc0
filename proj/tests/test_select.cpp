#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lagnet/error.hpp"
#include "lagnet/select.hpp"
#include "lagnet/serialize.hpp"

using namespace lagnet;

namespace {

TimeSeries ar2_series(std::size_t n, std::uint64_t seed) {
    GeneratorSpec g;
    g.intercept = 1.0;
    g.ar = {0.5, 0.3};
    return simulate(g, static_cast<std::int64_t>(n), seed);
}

FitReport report(std::string order, std::size_t params, double sse_train, double test) {
    FitReport r;
    r.order = std::move(order);
    r.activations = "sigmoid/identity";
    r.n_params = params;
    r.sse_train = sse_train;
    r.sse_test_onestep = test;
    return r;
}

}  // namespace

TEST_CASE("order notation parsing") {
    auto o = parse_order("NN(1,1+3)");
    CHECK(o.layers == 1);
    CHECK(o.lags.lags() == std::vector<int>{1, 3});

    CHECK(parse_order("NN(2,1-3)").lags.lags() == std::vector<int>{1, 2, 3});
    CHECK(parse_order(" NN( 1 , 1-3 + 5 ) ").lags.lags() == std::vector<int>{1, 2, 3, 5});
    CHECK(parse_order("NN(1,2+1)").lags.lags() == std::vector<int>{1, 2});

    CHECK_THROWS_AS(parse_order("NN(1,3-1)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,2-2)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,1+1)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,1-3+2)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(0,1)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,0)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,1) extra"), ValidationError);
    CHECK_THROWS_AS(parse_order("MLP(1,1)"), ValidationError);
    CHECK_THROWS_AS(parse_order("NN(1,1"), ValidationError);
}

TEST_CASE("order notation renders canonically and round-trips") {
    CHECK(parse_order("NN(1,1+2+3)").render() == "NN(1,1-3)");
    CHECK(parse_order("NN(1,1-2)").render() == "NN(1,1+2)");
    CHECK(parse_order("NN(2,1-3+5)").render() == "NN(2,1-3+5)");
    CHECK(parse_order("NN(1,3+1)").render() == "NN(1,1+3)");
    CHECK(parse_order("NN(1,1-4+6-8)").render() == "NN(1,1-4+6-8)");
    for (const char* text : {"NN(1,1+3)", "NN(2,1-9)", "NN(1,2+4+6)", "NN(1,1+3-5)"}) {
        const auto o = parse_order(text);
        CHECK(parse_order(o.render()) == o);
    }
}

TEST_CASE("order lists split on top-level commas") {
    auto list = parse_order_list("NN(1,1+2), NN(1,1-3),NN(1,1+3)");
    REQUIRE(list.size() == 3);
    CHECK(list[1].render() == "NN(1,1-3)");
    CHECK_THROWS_AS(parse_order_list("NN(1,1),,NN(1,2)"), ValidationError);
}

TEST_CASE("hidden-size rules") {
    CHECK(hidden_size(4, HiddenRule::heuristic_n) == 4);
    CHECK(hidden_size(4, HiddenRule::heuristic_2n_plus_1) == 9);
    CHECK(hidden_layers(3, 1, HiddenRule::tabulated) == std::vector<int>{2});
    CHECK(hidden_layers(8, 1, HiddenRule::tabulated) == std::vector<int>{7});
    CHECK(hidden_layers(4, 2, HiddenRule::tabulated) == std::vector<int>{3, 2});
    CHECK(hidden_layers(3, 2, HiddenRule::heuristic_n) == std::vector<int>{3, 3});
    CHECK_THROWS_AS(hidden_layers(2, 1, HiddenRule::tabulated), ValidationError);
    CHECK_THROWS_AS(hidden_layers(10, 1, HiddenRule::tabulated), ValidationError);
    CHECK(parse_hidden_rule("2n+1") == HiddenRule::heuristic_2n_plus_1);
    CHECK_THROWS_AS(parse_hidden_rule("sqrt"), ValidationError);
}

TEST_CASE("BIC") {
    CHECK(bic(100, 50.0, 10) == doctest::Approx(100 * std::log(0.5) + 10 * std::log(100.0)));
    CHECK(bic(100, 50.0, 11) > bic(100, 50.0, 10));
    CHECK(bic(100, 60.0, 10) > bic(100, 50.0, 10));
    CHECK(bic(100, 0.0, 3) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("candidate enumeration deduplicates order and activation pairs") {
    SearchSpec spec;
    spec.orders = parse_order_list("NN(1,1-3),NN(1,1+2+3),NN(1,1+3)");
    spec.contiguous = {{2, 3}};
    spec.activations = {parse_activation_pair("sigmoid/identity"),
                        parse_activation_pair("sigmoid/sigmoid"),
                        parse_activation_pair("sigmoid/identity")};
    auto cands = spec.candidates();
    // Distinct orders: 1-3, 1+3, 1+2; two activation pairs each.
    CHECK(cands.size() == 6);
    CHECK(cands.front().order.render() == "NN(1,1-3)");
    CHECK(cands.front().activations.label() == "sigmoid/identity");

    SearchSpec none;
    CHECK_THROWS_AS(none.candidates(), ValidationError);
}

TEST_CASE("ranking orders by criterion then parameters then train SSE then order") {
    Leaderboard board;
    board.criterion = Criterion::test_sse;
    board.rows = {report("NN(1,1-3)", 19, 5.0, 10.0), report("NN(1,1+3)", 11, 6.0, 10.0),
                  report("NN(1,1+2)", 11, 4.0, 10.0), report("NN(1,1-4)", 22, 1.0, 9.0),
                  report("NN(1,1+4)", 11, 4.0, 10.0)};
    rank_reports(board);
    std::vector<std::string> order;
    for (const auto& r : board.rows) order.push_back(r.order);
    CHECK(order == std::vector<std::string>{"NN(1,1-4)", "NN(1,1+2)", "NN(1,1+4)", "NN(1,1+3)",
                                            "NN(1,1-3)"});
    CHECK(board.tie_break == std::vector<std::string>{"leader", "criterion", "order", "sse_train",
                                                      "n_params"});
}

TEST_CASE("BIC ranking with equal parameter counts follows train SSE") {
    Leaderboard board;
    board.criterion = Criterion::bic;
    for (double s : {7.0, 3.0, 5.0}) {
        auto r = report("NN(1,1+2)", 11, s, 0.0);
        r.sse_test_onestep.reset();
        r.bic = bic(100, s, 11);
        r.order = "NN(1," + std::to_string(static_cast<int>(s)) + ")";
        board.rows.push_back(r);
    }
    rank_reports(board);
    CHECK(board.rows[0].sse_train == 3.0);
    CHECK(board.rows[1].sse_train == 5.0);
    CHECK(board.rows[2].sse_train == 7.0);
}

TEST_CASE("multi-restart keeps the lowest SSE and records every restart") {
    auto ts = ar2_series(150, 2);
    NetConfig c;
    c.lags = LagSpec({1, 2});
    c.hidden = {2};
    auto dm = build_design_matrix(ts, c.lags, false);
    TrainConfig tc;
    tc.max_epochs = 150;
    auto out = multi_restart_fit(c, dm, tc, 4, 10, 2);
    REQUIRE(out.sses.size() == 4);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t r = 0; r < 4; ++r) {
        REQUIRE(out.sses[r].has_value());
        if (*out.sses[r] < best) {
            best = *out.sses[r];
            arg = r;
        }
    }
    CHECK(out.best.train_sse() == best);
    CHECK(out.best_seed == 10 + arg);
    CHECK(out.failures.empty());

    // Restarts are independent of the thread count.
    auto serial = multi_restart_fit(c, dm, tc, 4, 10, 1);
    CHECK(serial.best.weights == out.best.weights);
}

TEST_CASE("search produces one row per feasible candidate") {
    auto ts = ar2_series(120, 5);
    auto split = split_train_test(ts, 100);
    SearchSpec spec;
    spec.orders = parse_order_list("NN(1,1),NN(1,1+2),NN(1,1-3),NN(1,150)");
    spec.hidden_rule = HiddenRule::heuristic_n;
    spec.restarts = 2;
    spec.base_seed = 3;
    spec.train.max_epochs = 100;
    auto board = run_search(spec, split.train, split.test);
    CHECK(board.criterion == Criterion::test_sse);
    CHECK(board.rows.size() == 3);
    REQUIRE(board.skipped.size() == 1);
    CHECK(board.skipped[0].order == "NN(1,150)");
    CHECK(board.test_length == 20);
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        const auto& r = board.rows[i];
        REQUIRE(r.sse_test_onestep.has_value());
        REQUIRE(r.sse_test_iterated.has_value());
        CHECK(r.restart_sses.size() == 2);
        CHECK(r.seed >= 3);
        CHECK(r.seed <= 4);
        CHECK(r.bic == doctest::Approx(bic(r.n_train_rows, r.sse_train, r.n_params)));
        if (i > 0) CHECK(*board.rows[i - 1].sse_test_onestep <= *r.sse_test_onestep);
    }
}

TEST_CASE("search without a test window ranks by BIC") {
    auto ts = ar2_series(100, 6);
    SearchSpec spec;
    spec.orders = parse_order_list("NN(1,1),NN(1,1+2)");
    spec.hidden_rule = HiddenRule::heuristic_n;
    spec.restarts = 1;
    spec.train.max_epochs = 50;
    auto board = run_search(spec, ts, std::nullopt);
    CHECK(board.criterion == Criterion::bic);
    REQUIRE(board.rows.size() == 2);
    CHECK(board.rows[0].bic <= board.rows[1].bic);
    CHECK_FALSE(board.rows[0].sse_test_onestep.has_value());
}

TEST_CASE("search output does not depend on the thread count") {
    auto ts = ar2_series(120, 9);
    auto split = split_train_test(ts, 100);
    SearchSpec spec;
    spec.orders = parse_order_list("NN(1,1+2),NN(1,1-3)");
    spec.hidden_rule = HiddenRule::heuristic_n;
    spec.restarts = 3;
    spec.train.max_epochs = 80;
    spec.train.shuffle = true;
    spec.threads = 1;
    auto serial = run_search(spec, split.train, split.test);
    spec.threads = 4;
    auto parallel = run_search(spec, split.train, split.test);
    CHECK(leaderboard_csv(serial) == leaderboard_csv(parallel));
    CHECK(to_json(serial).dump() == to_json(parallel).dump());
}
