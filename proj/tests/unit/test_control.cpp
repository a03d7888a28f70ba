#include <cmath>
#include <vector>

#include "doctest.h"
#include "hrr/control.hpp"

using namespace hrr;

namespace {

StoppingSpec single_stop(bool itm = false) {
    StoppingSpec s;
    s.in_the_money_only = itm;
    return s;
}

std::vector<int> values(const ControlProblem& p, int j, std::size_t y, State x) {
    return admissible_action_values(p, j, y, x);
}

} // namespace

TEST_CASE("stopping admissibility") {
    const std::vector<double> x{110.0, 90.0};
    StoppingProblem single(single_stop());
    CHECK(values(single, 3, single.control_index(1.0), x) == std::vector<int>{0, 1});
    CHECK(values(single, 3, single.control_index(0.0), x) == std::vector<int>{0});

    StoppingSpec multi = single_stop();
    multi.rights = 4;
    StoppingProblem swing(multi);
    CHECK(swing.num_controls() == 5);
    CHECK(values(swing, 0, swing.control_index(0.0), x) == std::vector<int>{0});
    CHECK(values(swing, 0, swing.control_index(4.0), x) == std::vector<int>{0, 1});
}

TEST_CASE("in-the-money rule withholds exercise at zero payoff") {
    StoppingProblem p(single_stop(true));
    const std::vector<double> otm{90.0, 95.0};
    const std::vector<double> itm{110.0, 90.0};
    CHECK(values(p, 2, 1, otm) == std::vector<int>{0});
    CHECK(values(p, 2, 1, itm) == std::vector<int>{0, 1});
}

TEST_CASE("stopping transition and cash flow") {
    StoppingProblem p(single_stop());
    CHECK(p.transition(0, 1, 1) == 0);
    CHECK(p.transition(0, 0, 1) == 1);
    const std::vector<double> x{110.0, 90.0};
    CHECK(p.cash_flow(1, 1, 1, x) == doctest::Approx(10.0 * std::exp(-0.05 / 9.0)).epsilon(1e-12));
    CHECK(p.cash_flow(1, 1, 1, x) == doctest::Approx(9.9446).epsilon(1e-4));
    CHECK(p.cash_flow(1, 0, 1, x) == 0.0);
}

TEST_CASE("gas storage admissibility, transition and cash flow") {
    GasStorageProblem g(GasStorageSpec{});
    const std::vector<double> x{100.0, 100.0};
    CHECK(g.num_controls() == 9);
    CHECK(values(g, 0, 4, x) == std::vector<int>{0});
    CHECK(values(g, 1, 0, x) == std::vector<int>{0, 1});
    CHECK(values(g, 1, 1, x) == std::vector<int>{-1, 0, 1});
    CHECK(values(g, 1, 8, x) == std::vector<int>{-1, 0});
    CHECK(g.initial_control() == 4);
    CHECK(g.transition(1, 0, 4) == 3);
    CHECK(g.transition(1, 2, 4) == 5);

    CHECK(g.cash_flow(1, 0, 4, x) == doctest::Approx(12.5 * std::exp(-0.7 / 365.0)).epsilon(1e-12));
    CHECK(g.cash_flow(1, 0, 4, x) == doctest::Approx(12.4760).epsilon(1e-4));
    CHECK(g.cash_flow(1, 1, 4, x) == 0.0);
    CHECK(g.cash_flow(1, 2, 4, x) == doctest::Approx(-12.5 * std::exp(-0.7 / 365.0)).epsilon(1e-12));
}

TEST_CASE("terminal values") {
    StoppingProblem p(single_stop());
    const std::vector<double> x{110.0, 90.0};
    CHECK(terminal_value(p, 1, x) == doctest::Approx(10.0 * std::exp(-0.05)).epsilon(1e-12));
    CHECK(terminal_value(p, 0, x) == 0.0);

    GasStorageProblem g(GasStorageSpec{});
    const std::vector<double> gx{100.0, 100.0};
    CHECK(terminal_value(g, 4, gx) == doctest::Approx(12.5 * std::exp(-0.1 * 52 * 7 / 365.0)).epsilon(1e-12));

    StoppingSpec zero = single_stop();
    zero.payoff = PayoffKind::zero;
    StoppingProblem z(zero);
    CHECK(terminal_value(z, 1, x) == 0.0);
}

TEST_CASE("descriptor round trip and validation") {
    StoppingSpec s = single_stop(true);
    s.rights = 3;
    s.dim = 5;
    StoppingProblem p(s);
    const auto back = make_problem(p.descriptor());
    CHECK(back->descriptor() == p.descriptor());
    CHECK_NOTHROW(back->validate());

    GasStorageProblem g(GasStorageSpec{});
    CHECK(make_problem(g.descriptor())->descriptor() == g.descriptor());
    CHECK_NOTHROW(g.validate());
    CHECK_THROWS(g.control_index(0.3));
}
