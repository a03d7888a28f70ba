#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrr/basis.hpp"
#include "hrr/control.hpp"
#include "json.hpp"

namespace hrr {

enum class Algorithm { standard, hrr_a, hrr_b, rr_diagonal };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

// L^y for every control y, as control indices.
using ReinforcementSets = std::vector<std::vector<std::size_t>>;

// Operation counts standing in for the unit costs of the cost analysis:
// simulated states (c_X), basis-vector and cash-flow evaluations (c_f),
// hierarchy cells visited while building reinforcement columns, and the
// least-squares problems solved with their shapes.
struct CostCounters {
    std::uint64_t path_simulations = 0;
    std::uint64_t basis_evals = 0;
    std::uint64_t cash_flow_evals = 0;
    std::uint64_t value_cells = 0;        // value vectors v^(i)_j(., x) evaluated
    std::uint64_t continuation_cells = 0; // continuation vectors c^(i)_j(., x) evaluated
    std::uint64_t reinforcement_evals = 0; // value cells spent on reinforcement columns
    std::uint64_t lsq_solves = 0;
    std::uint64_t lsq_rows = 0;
    std::map<std::size_t, std::uint64_t> lsq_widths; // columns -> number of solves

    CostCounters& operator+=(const CostCounters& other);
    nlohmann::json to_json() const;
};

struct TruncationOptions {
    bool enabled = false;
    double cash_flow_bound = 0.0; // C_H; the clip level is W = J * C_H
};

// Regression coefficients indexed by (level i, epoch j, control y).
//
// Level i at epoch j < J only differs from level J - j when i < J - j, so
// storage is kept for the effective level min(i, J - j). Cells that a solver
// chose not to compute are reported as skipped and throw on access.
class ValueHierarchy {
public:
    ValueHierarchy(std::shared_ptr<const ControlProblem> problem, BasisFamily basis, Algorithm algorithm,
                   int depth, ReinforcementSets sets, TruncationOptions truncation = {});

    const ControlProblem& problem() const { return *problem_; }
    std::shared_ptr<const ControlProblem> problem_ptr() const { return problem_; }
    const BasisFamily& basis() const { return basis_; }
    Algorithm algorithm() const { return algorithm_; }
    int depth() const { return depth_; }
    int horizon() const { return problem_->horizon(); }
    const ReinforcementSets& reinforcement_sets() const { return sets_; }
    const TruncationOptions& truncation() const { return truncation_; }
    // W = J * C_H when truncation is enabled.
    std::optional<double> truncation_bound() const;

    int effective_level(int i, int j) const;
    bool computed(int i, int j) const;
    bool skipped(int i, int j) const { return !computed(i, j); }

    // Coefficients of c^(i)_j(y, .): K entries at effective level 0, K + R^y above.
    const std::vector<double>& coefficients(int i, int j, std::size_t y) const;
    // Mean squared training residual of the regression for (i, j, y).
    double residual(int i, int j, std::size_t y) const;

    void set_cell(int level, int j, std::vector<std::vector<double>> coefficients, std::vector<double> residuals);
    // Grows or shrinks the number of stored levels (used by adaptive training).
    void set_depth(int depth);

    std::uint64_t train_seed = 0;
    CostCounters training_counters;
    // Regression targets v^(I)_{j+1}(y, X_{j+1}) per epoch j (M x |L|), kept only on request.
    std::vector<Eigen::MatrixXd> training_targets;

    nlohmann::json to_json() const;
    static ValueHierarchy from_json(const nlohmann::json& doc);
    void save(const std::filesystem::path& file) const;
    static ValueHierarchy load(const std::filesystem::path& file);

private:
    struct Cell {
        bool computed = false;
        std::vector<std::vector<double>> coefficients;
        std::vector<double> residuals;
    };
    const Cell& cell(int i, int j) const;

    std::shared_ptr<const ControlProblem> problem_;
    BasisFamily basis_;
    Algorithm algorithm_;
    int depth_;
    ReinforcementSets sets_;
    TruncationOptions truncation_;
    // cells_[level][epoch], level in 0..min(depth, J), epoch in 0..J-1.
    std::vector<std::vector<Cell>> cells_;
};

// Recursive evaluation of v^(i)_j and c^(i)_j at a state. Each call computes
// the full vector over controls for each (level, epoch) it visits, once.
// Holds scratch buffers, so use one evaluator per thread.
class Evaluator {
public:
    explicit Evaluator(const ValueHierarchy& hierarchy);

    const ValueHierarchy& hierarchy() const { return h_; }

    // v^(i)_j(y, x) for all y.
    std::span<const double> values(int i, int j, State x);
    // c^(i)_j(y, x) for all y; identically zero at j = J.
    std::span<const double> continuations(int i, int j, State x);

    // First maximizer over admissible a of H_j(a,y,x) + c^(i)_j(phi(a,y), x).
    std::size_t greedy_action(int i, int j, std::size_t y, State x);

    // Building blocks shared with training so replayed values match exactly.
    // c^(e)_j(., x) from a basis row psi(x) and, for e > 0, v^(e-1)_{j+1}(., x).
    void continuation_from(int level, int j, std::span<const double> psi, std::span<const double> inner,
                           std::span<double> out);
    // Bellman maximum of H_j + cont over admissible actions, for all y.
    void bellman(int j, State x, std::span<const double> cont, std::span<double> out);
    void terminal(State x, std::span<double> out);

    CostCounters counters;

private:
    std::span<const double> value_rec(int i, int j, State x, std::size_t slot);
    std::span<const double> continuation_rec(int i, int j, State x, std::size_t slot);

    const ValueHierarchy& h_;
    std::size_t controls_;
    std::vector<double> psi_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> conts_;
    std::vector<double> zeros_;
    std::optional<double> bound_;
};

double eval_value(const ValueHierarchy& h, int i, int j, std::size_t y, State x);
double eval_continuation(const ValueHierarchy& h, int i, int j, std::size_t y, State x);

} // namespace hrr
