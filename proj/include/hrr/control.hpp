#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hrr {

using State = std::span<const double>;

// Finite-horizon control problem with finite control set L and action set K.
// Controls and actions are addressed by their index in a fixed ordering that
// is chosen at construction; that ordering drives iteration and argmax
// tie-breaking everywhere else in the library.
class ControlProblem {
public:
    virtual ~ControlProblem() = default;

    // Last decision epoch J; epochs run 0..J.
    virtual int horizon() const = 0;
    virtual std::size_t state_dim() const = 0;

    // Ordered values of the control set L.
    virtual std::span<const double> controls() const = 0;
    // Ordered values of the action set K.
    virtual std::span<const int> actions() const = 0;

    // Indices (into actions()) of the admissible actions, in action order.
    virtual std::span<const std::size_t> admissible(int j, std::size_t y, State x) const = 0;
    // Control index after taking action a at epoch j from control y.
    virtual std::size_t transition(int j, std::size_t a, std::size_t y) const = 0;
    // Discounted cash-flow H_j(a, y, x).
    virtual double cash_flow(int j, std::size_t a, std::size_t y, State x) const = 0;

    // Self-describing parameters; make_problem() inverts this.
    virtual nlohmann::json descriptor() const = 0;

    std::size_t num_controls() const { return controls().size(); }
    std::size_t num_actions() const { return actions().size(); }

    // Index of the control with the given value; throws if it is not in L.
    std::size_t control_index(double value) const;

    // Checks nonempty admissible sets and closure of the transition over
    // every (j, y, a) on a zero state. Throws std::logic_error on violation.
    void validate() const;
};

enum class PayoffKind { max_call, zero };

struct StoppingSpec {
    PayoffKind payoff = PayoffKind::max_call;
    double strike = 100.0;
    double rate = 0.05;
    double maturity = 1.0;  // years
    int exercise_dates = 9; // J
    int rights = 1;         // y_max
    std::size_t dim = 2;
    // Exercise only where g(x) > 0; spending a right on a zero payoff never pays.
    bool in_the_money_only = true;
};

// Single (rights == 1) or multiple stopping with at most one exercise per date.
class StoppingProblem final : public ControlProblem {
public:
    explicit StoppingProblem(StoppingSpec spec);

    int horizon() const override { return spec_.exercise_dates; }
    std::size_t state_dim() const override { return spec_.dim; }
    std::span<const double> controls() const override { return controls_; }
    std::span<const int> actions() const override { return actions_; }
    std::span<const std::size_t> admissible(int j, std::size_t y, State x) const override;
    std::size_t transition(int j, std::size_t a, std::size_t y) const override;
    double cash_flow(int j, std::size_t a, std::size_t y, State x) const override;
    nlohmann::json descriptor() const override;

    // Undiscounted payoff g(x).
    double payoff(State x) const;
    double exercise_time(int j) const;
    const StoppingSpec& spec() const { return spec_; }

private:
    StoppingSpec spec_;
    std::vector<double> controls_;
    std::vector<int> actions_{0, 1};
    std::vector<double> discount_;
    std::vector<std::size_t> stop_or_wait_{0, 1};
    std::vector<std::size_t> wait_only_{0};
};

struct GasStorageSpec {
    int granularity = 8;    // N, with Delta = 1/N
    int trading_stride = 7; // days between trading dates
    int dates = 52;         // J
    double rate = 0.1;
    double initial_fill = 0.5;
};

// Storage with fill levels {0, 1/N, ..., 1}; sell (-1), hold (0) or buy (+1)
// one unit of 1/N at the gas price (second state coordinate). No trading at j=0.
class GasStorageProblem final : public ControlProblem {
public:
    explicit GasStorageProblem(GasStorageSpec spec);

    int horizon() const override { return spec_.dates; }
    std::size_t state_dim() const override { return 2; }
    std::span<const double> controls() const override { return controls_; }
    std::span<const int> actions() const override { return actions_; }
    std::span<const std::size_t> admissible(int j, std::size_t y, State x) const override;
    std::size_t transition(int j, std::size_t a, std::size_t y) const override;
    double cash_flow(int j, std::size_t a, std::size_t y, State x) const override;
    nlohmann::json descriptor() const override;

    std::size_t initial_control() const { return initial_index_; }
    const GasStorageSpec& spec() const { return spec_; }

private:
    GasStorageSpec spec_;
    std::vector<double> controls_;
    std::vector<int> actions_{-1, 0, 1};
    std::vector<double> discount_;
    std::size_t initial_index_ = 0;
    std::vector<std::size_t> hold_{1};
    std::vector<std::size_t> empty_{1, 2};
    std::vector<std::size_t> interior_{0, 1, 2};
    std::vector<std::size_t> full_{0, 1};
};

// v_J(y, x) = max over admissible a of H_J(a, y, x).
double terminal_value(const ControlProblem& problem, std::size_t y, State x);

// Admissible actions as values rather than indices.
std::vector<int> admissible_action_values(const ControlProblem& problem, int j, std::size_t y, State x);

// Rebuilds a problem from ControlProblem::descriptor().
std::shared_ptr<const ControlProblem> make_problem(const nlohmann::json& descriptor);

} // namespace hrr
