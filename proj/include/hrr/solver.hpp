#pragma once

#include <memory>

#include "hrr/basis.hpp"
#include "hrr/control.hpp"
#include "hrr/hierarchy.hpp"
#include "hrr/models.hpp"
#include "hrr/regression.hpp"

namespace hrr {

struct SolverOptions {
    LeastSquaresOptions lsq;
    TruncationOptions truncation;
    std::size_t workers = 1;
    // Keep the per-epoch regression targets in ValueHierarchy::training_targets.
    bool keep_targets = false;
};

// Adaptive depth for algorithm A: stop once the mean relative change of the
// per-(epoch, control) training residuals between consecutive levels falls
// below `threshold`, or at `max_depth` (0 means J).
struct AdaptiveTermination {
    double threshold = 1e-3;
    int max_depth = 0;
};

// Default reinforcement sets: {1} for single stopping, {1..y_max} for
// multiple stopping, {Y0} for gas storage; the same set for every y.
ReinforcementSets default_reinforcement(const ControlProblem& problem);
ReinforcementSets reinforce_all(const ControlProblem& problem);
ReinforcementSets reinforce_self(const ControlProblem& problem);
ReinforcementSets reinforce_fixed(const ControlProblem& problem, const std::vector<std::size_t>& controls);

// Level 0 only: regress v_{j+1}(y, X_{j+1}) on the plain basis at X_j.
ValueHierarchy solve_standard(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                              const BasisFamily& basis, const SolverOptions& options = {});

// Algorithm A with a fixed number of levels: one full backward pass per level,
// level i regressing its own next-epoch values on the basis reinforced by level i-1.
ValueHierarchy solve_hrr_a(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets, int depth,
                           const SolverOptions& options = {});
ValueHierarchy solve_hrr_a(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets,
                           const AdaptiveTermination& termination, const SolverOptions& options = {});

// Algorithm B: a single backward pass; at each epoch all levels regress the
// level-I values. Cells with i + j < I do not feed v^(I) and are skipped.
ValueHierarchy solve_hrr_b(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets, int depth,
                           const SolverOptions& options = {});

// Algorithm B with I = J: only the cells i = J - j are trained, which is the
// full-depth reinforced regression extended to control problems.
ValueHierarchy solve_rr_diagonal(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                                 const BasisFamily& basis, const ReinforcementSets& sets,
                                 const SolverOptions& options = {});

} // namespace hrr
