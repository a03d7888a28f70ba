#include <cmath>
#include <vector>

#include "doctest.h"
#include "hrr/evaluate.hpp"
#include "hrr/solver.hpp"
#include "oracles.hpp"

using namespace hrr;

namespace {

std::shared_ptr<const ControlProblem> max_call(std::size_t d, int J, int rights = 1, double strike = 100.0) {
    StoppingSpec s;
    s.dim = d;
    s.exercise_dates = J;
    s.rights = rights;
    s.strike = strike;
    return std::make_shared<StoppingProblem>(s);
}

GbmParams gbm(std::size_t d, int J, double x0 = 100.0) {
    GbmParams g;
    g.dim = d;
    g.dates = J;
    g.x0 = x0;
    return g;
}

} // namespace

TEST_CASE("greedy action compares stop against continuation") {
    StoppingSpec s;
    s.dim = 1;
    s.rate = 0.0;
    s.exercise_dates = 2;
    auto p = std::make_shared<StoppingProblem>(s);
    const std::vector<double> x{106.0};
    ValueHierarchy h(p, BasisFamily::build("psi1", 1), Algorithm::standard, 0, default_reinforcement(*p));
    h.set_cell(0, 0, {{0.0, 0.0}, {5.0, 0.0}}, {0.0, 0.0});
    h.set_cell(0, 1, {{0.0, 0.0}, {5.0, 0.0}}, {0.0, 0.0});
    CHECK(greedy_action(h, 0, 0, 1, x) == 1);
    h.set_cell(0, 0, {{0.0, 0.0}, {6.0, 0.0}}, {0.0, 0.0});
    CHECK(greedy_action(h, 0, 0, 1, x) == 0);
    CHECK(greedy_action(h, 0, 0, 0, x) == 0);
}

TEST_CASE("zero payoff gives a zero bound") {
    StoppingSpec s;
    s.payoff = PayoffKind::zero;
    s.exercise_dates = 4;
    auto p = std::make_shared<StoppingProblem>(s);
    const auto train = simulate_gbm(gbm(2, 4), 200, 1);
    const auto test = simulate_gbm(gbm(2, 4), 300, 2);
    const auto h = solve_standard(p, train, BasisFamily::build("psi1", 2));
    const auto r = lower_bound(h, 0, test, 1);
    CHECK(r.estimate == 0.0);
    CHECK(r.half_width == 0.0);
    CHECK(r.paths == 300);
    CHECK(value_readout(h, 0, 1, test.state(0, 0)) == 0.0);
}

TEST_CASE("constant-price storage sells whenever it can") {
    GasStorageSpec spec;
    spec.dates = 10;
    auto p = std::make_shared<GasStorageProblem>(spec);
    OilGasParams og;
    og.beta = 100.0;
    og.sigma1 = 0.0;
    og.sigma2 = 0.0;
    og.lambda = 0.0;
    const auto train = simulate_oil_gas(og, 50, 1, 7, 10);
    const auto test = simulate_oil_gas(og, 40, 2, 7, 10);
    const auto h = solve_standard(p, train, BasisFamily::build("P1(X2)", 2));

    const double expected = oracle::constant_price_storage(100.0, 8, 4, 10, 7, 0.1);
    double formula = 0.0;
    for (int j = 1; j <= 4; ++j) formula += 12.5 * std::exp(-0.1 * 7 * j / 365.0);
    CHECK(expected == doctest::Approx(formula).epsilon(1e-14));
    CHECK(formula == doctest::Approx(49.761).epsilon(1e-5));

    LowerBoundOptions opt;
    opt.keep_path_values = true;
    const auto r = lower_bound(h, 0, test, p->initial_control(), opt);
    for (double v : r.path_values) CHECK(v == doctest::Approx(formula).epsilon(1e-12));
    CHECK(r.half_width < 1e-9);
    for (int j = 1; j < 10; ++j) {
        for (std::size_t y = 1; y < 9; ++y) CHECK(greedy_action(h, 0, j, y, test.state(0, static_cast<std::size_t>(j))) == 0);
    }
}

TEST_CASE("block size and worker count do not change the estimate") {
    const auto p = max_call(2, 5, 2);
    const auto train = simulate_gbm(gbm(2, 5), 2000, 1);
    const auto h = solve_hrr_b(p, train, BasisFamily::build("psi1", 2), default_reinforcement(*p), 1);
    GbmSource source(gbm(2, 5), 2);
    const auto test = simulate_gbm(gbm(2, 5), 3000, 2);
    const auto whole = lower_bound(h, 1, test, 2);
    LowerBoundOptions small;
    small.block_size = 7;
    LowerBoundOptions threaded;
    threaded.workers = 3;
    threaded.block_size = 1000;
    const auto a = lower_bound(h, 1, source, 3000, 2, small);
    const auto b = lower_bound(h, 1, source, 3000, 2, threaded);
    CHECK(a.estimate == whole.estimate);
    CHECK(b.estimate == whole.estimate);
    CHECK(a.half_width == whole.half_width);
    CHECK(b.std_dev == whole.std_dev);
    CHECK(a.counters.path_simulations == 3000 * 6);
}

TEST_CASE("half width is three standard errors") {
    const auto p = max_call(2, 5);
    const auto train = simulate_gbm(gbm(2, 5), 1000, 1);
    const auto test = simulate_gbm(gbm(2, 5), 2000, 2);
    const auto h = solve_standard(p, train, BasisFamily::build("psi1", 2));
    LowerBoundOptions opt;
    opt.keep_path_values = true;
    const auto r = lower_bound(h, 0, test, 1, opt);
    double mean = 0.0;
    for (double v : r.path_values) mean += v;
    mean /= 2000.0;
    double ss = 0.0;
    for (double v : r.path_values) ss += (v - mean) * (v - mean);
    CHECK(r.estimate == doctest::Approx(mean).epsilon(1e-12));
    CHECK(r.half_width == doctest::Approx(3.0 * std::sqrt(ss / 1999.0 / 2000.0)).epsilon(1e-10));
}

TEST_CASE("scaling prices and strike scales the bound") {
    const auto train1 = simulate_gbm(gbm(2, 5, 100.0), 2000, 1);
    const auto train2 = simulate_gbm(gbm(2, 5, 200.0), 2000, 1);
    const auto test1 = simulate_gbm(gbm(2, 5, 100.0), 4000, 2);
    const auto test2 = simulate_gbm(gbm(2, 5, 200.0), 4000, 2);
    const auto p1 = max_call(2, 5, 1, 100.0);
    const auto p2 = max_call(2, 5, 1, 200.0);
    const auto basis = BasisFamily::build("psi1", 2);
    const auto h1 = solve_hrr_b(p1, train1, basis, default_reinforcement(*p1), 1);
    const auto h2 = solve_hrr_b(p2, train2, basis, default_reinforcement(*p2), 1);
    const auto r1 = lower_bound(h1, 1, test1, 1);
    const auto r2 = lower_bound(h2, 1, test2, 1);
    CHECK(r2.estimate == doctest::Approx(2.0 * r1.estimate).epsilon(1e-8));
    CHECK(r2.half_width == doctest::Approx(2.0 * r1.half_width).epsilon(1e-6));
}

TEST_CASE("more rights are worth more") {
    const auto train = simulate_gbm(gbm(2, 6), 5000, 1);
    const auto test = simulate_gbm(gbm(2, 6), 10000, 2);
    double previous = 0.0;
    for (int rights = 1; rights <= 3; ++rights) {
        const auto p = max_call(2, 6, rights);
        const auto h = solve_standard(p, train, BasisFamily::build("psi1", 2));
        const double lb = lower_bound(h, 0, test, static_cast<std::size_t>(rights)).estimate;
        CHECK(lb > previous);
        previous = lb;
    }
}

TEST_CASE("invalid evaluation requests") {
    const auto p = max_call(2, 4);
    const auto train = simulate_gbm(gbm(2, 4), 200, 1);
    const auto h = solve_hrr_b(p, train, BasisFamily::build("psi1", 2), default_reinforcement(*p), 1);
    CHECK_THROWS_AS(lower_bound(h, 0, train, 1), std::invalid_argument);
    const auto test = simulate_gbm(gbm(2, 4), 200, 2);
    CHECK_THROWS_AS(lower_bound(h, 2, test, 1), std::invalid_argument);
    CHECK_THROWS_AS(lower_bound(h, 1, test, 5), std::invalid_argument);
    CHECK_THROWS_AS(lower_bound(h, 1, simulate_gbm(gbm(2, 3), 10, 2), 1), std::invalid_argument);
    CHECK_NOTHROW(lower_bound(h, 1, test, 1));
}
