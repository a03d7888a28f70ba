#include "hrr/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hrr {

std::size_t ControlProblem::control_index(double value) const {
    const auto ls = controls();
    for (std::size_t y = 0; y < ls.size(); ++y) {
        if (std::abs(ls[y] - value) <= 1e-12 * std::max(1.0, std::abs(value))) return y;
    }
    throw std::invalid_argument("control value " + std::to_string(value) + " is not in the control set");
}

void ControlProblem::validate() const {
    const std::vector<double> zero(state_dim(), 0.0);
    for (int j = 0; j <= horizon(); ++j) {
        for (std::size_t y = 0; y < num_controls(); ++y) {
            const auto acts = admissible(j, y, zero);
            if (acts.empty()) {
                throw std::logic_error("empty admissible set at epoch " + std::to_string(j));
            }
            for (std::size_t a : acts) {
                if (a >= num_actions()) throw std::logic_error("admissible action index out of range");
                if (transition(j, a, y) >= num_controls()) {
                    throw std::logic_error("transition leaves the control set");
                }
            }
        }
    }
}

double terminal_value(const ControlProblem& problem, std::size_t y, State x) {
    const int J = problem.horizon();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a : problem.admissible(J, y, x)) {
        best = std::max(best, problem.cash_flow(J, a, y, x));
    }
    return best;
}

std::vector<int> admissible_action_values(const ControlProblem& problem, int j, std::size_t y, State x) {
    std::vector<int> out;
    for (std::size_t a : problem.admissible(j, y, x)) out.push_back(problem.actions()[a]);
    return out;
}

// ---------------------------------------------------------------------------
// Stopping

StoppingProblem::StoppingProblem(StoppingSpec spec) : spec_(spec) {
    if (spec_.exercise_dates < 1) throw std::invalid_argument("stopping: exercise_dates must be >= 1");
    if (spec_.rights < 1) throw std::invalid_argument("stopping: rights must be >= 1");
    if (spec_.dim < 1) throw std::invalid_argument("stopping: dim must be >= 1");
    if (!(spec_.maturity > 0.0)) throw std::invalid_argument("stopping: maturity must be > 0");
    for (int y = 0; y <= spec_.rights; ++y) controls_.push_back(static_cast<double>(y));
    for (int j = 0; j <= spec_.exercise_dates; ++j) {
        discount_.push_back(std::exp(-spec_.rate * exercise_time(j)));
    }
}

double StoppingProblem::exercise_time(int j) const {
    return j * (spec_.maturity / spec_.exercise_dates);
}

double StoppingProblem::payoff(State x) const {
    if (spec_.payoff == PayoffKind::zero) return 0.0;
    const double top = *std::max_element(x.begin(), x.end());
    return std::max(top - spec_.strike, 0.0);
}

std::span<const std::size_t> StoppingProblem::admissible(int j, std::size_t y, State x) const {
    if (j < 0 || j > spec_.exercise_dates) throw std::out_of_range("stopping: epoch out of range");
    if (y >= controls_.size()) throw std::out_of_range("stopping: control not in L");
    const bool may_stop = y >= 1 && (!spec_.in_the_money_only || payoff(x) > 0.0);
    return may_stop ? std::span<const std::size_t>(stop_or_wait_) : std::span<const std::size_t>(wait_only_);
}

std::size_t StoppingProblem::transition(int, std::size_t a, std::size_t y) const {
    return y > a ? y - a : 0;
}

double StoppingProblem::cash_flow(int j, std::size_t a, std::size_t, State x) const {
    if (a == 0) return 0.0;
    return payoff(x) * discount_[static_cast<std::size_t>(j)];
}

nlohmann::json StoppingProblem::descriptor() const {
    return {{"type", spec_.rights == 1 ? "max_call" : "multi_stop"},
            {"payoff", spec_.payoff == PayoffKind::zero ? "zero" : "max_call"},
            {"strike", spec_.strike},
            {"rate", spec_.rate},
            {"maturity", spec_.maturity},
            {"exercise_dates", spec_.exercise_dates},
            {"rights", spec_.rights},
            {"dim", spec_.dim},
            {"in_the_money_only", spec_.in_the_money_only}};
}

// ---------------------------------------------------------------------------
// Gas storage

GasStorageProblem::GasStorageProblem(GasStorageSpec spec) : spec_(spec) {
    if (spec_.granularity < 1) throw std::invalid_argument("gas_storage: granularity must be >= 1");
    if (spec_.dates < 1) throw std::invalid_argument("gas_storage: dates must be >= 1");
    if (spec_.trading_stride < 1) throw std::invalid_argument("gas_storage: trading_stride must be >= 1");
    for (int k = 0; k <= spec_.granularity; ++k) {
        controls_.push_back(static_cast<double>(k) / spec_.granularity);
    }
    for (int j = 0; j <= spec_.dates; ++j) {
        discount_.push_back(std::exp(-spec_.rate * j * (spec_.trading_stride / 365.0)));
    }
    initial_index_ = control_index(spec_.initial_fill);
}

std::span<const std::size_t> GasStorageProblem::admissible(int j, std::size_t y, State) const {
    if (j < 0 || j > spec_.dates) throw std::out_of_range("gas_storage: epoch out of range");
    if (y >= controls_.size()) throw std::out_of_range("gas_storage: control not in L");
    if (j == 0) return hold_;
    if (y == 0) return empty_;
    if (y + 1 == controls_.size()) return full_;
    return interior_;
}

std::size_t GasStorageProblem::transition(int, std::size_t a, std::size_t y) const {
    const long next = static_cast<long>(y) + actions_[a];
    return static_cast<std::size_t>(std::clamp(next, 0L, static_cast<long>(controls_.size()) - 1));
}

double GasStorageProblem::cash_flow(int j, std::size_t a, std::size_t, State x) const {
    const int act = actions_[a];
    if (act == 0) return 0.0;
    return -act * (1.0 / spec_.granularity) * x[1] * discount_[static_cast<std::size_t>(j)];
}

nlohmann::json GasStorageProblem::descriptor() const {
    return {{"type", "gas_storage"},
            {"granularity", spec_.granularity},
            {"trading_stride", spec_.trading_stride},
            {"dates", spec_.dates},
            {"rate", spec_.rate},
            {"initial_fill", spec_.initial_fill}};
}

std::shared_ptr<const ControlProblem> make_problem(const nlohmann::json& d) {
    const std::string type = d.at("type").get<std::string>();
    if (type == "max_call" || type == "multi_stop") {
        StoppingSpec s;
        s.payoff = d.value("payoff", std::string("max_call")) == "zero" ? PayoffKind::zero : PayoffKind::max_call;
        s.strike = d.at("strike").get<double>();
        s.rate = d.at("rate").get<double>();
        s.maturity = d.at("maturity").get<double>();
        s.exercise_dates = d.at("exercise_dates").get<int>();
        s.rights = d.at("rights").get<int>();
        s.dim = d.at("dim").get<std::size_t>();
        s.in_the_money_only = d.value("in_the_money_only", true);
        return std::make_shared<StoppingProblem>(s);
    }
    if (type == "gas_storage") {
        GasStorageSpec s;
        s.granularity = d.at("granularity").get<int>();
        s.trading_stride = d.at("trading_stride").get<int>();
        s.dates = d.at("dates").get<int>();
        s.rate = d.at("rate").get<double>();
        s.initial_fill = d.at("initial_fill").get<double>();
        return std::make_shared<GasStorageProblem>(s);
    }
    throw std::invalid_argument("unknown problem type '" + type + "'");
}

} // namespace hrr
