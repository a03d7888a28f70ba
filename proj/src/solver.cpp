#include "hrr/solver.hpp"

#include "hrr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace hrr {

ReinforcementSets default_reinforcement(const ControlProblem& problem) {
    const std::size_t n = problem.num_controls();
    if (const auto* gas = dynamic_cast<const GasStorageProblem*>(&problem)) {
        return ReinforcementSets(n, {gas->initial_control()});
    }
    if (dynamic_cast<const StoppingProblem*>(&problem)) {
        std::vector<std::size_t> rights;
        for (std::size_t y = 1; y < n; ++y) rights.push_back(y);
        return ReinforcementSets(n, rights);
    }
    return reinforce_all(problem);
}

ReinforcementSets reinforce_all(const ControlProblem& problem) {
    std::vector<std::size_t> all(problem.num_controls());
    for (std::size_t y = 0; y < all.size(); ++y) all[y] = y;
    return ReinforcementSets(all.size(), all);
}

ReinforcementSets reinforce_self(const ControlProblem& problem) {
    ReinforcementSets sets(problem.num_controls());
    for (std::size_t y = 0; y < sets.size(); ++y) sets[y] = {y};
    return sets;
}

ReinforcementSets reinforce_fixed(const ControlProblem& problem, const std::vector<std::size_t>& controls) {
    for (std::size_t y : controls) {
        if (y >= problem.num_controls()) throw std::invalid_argument("reinforcement control not in L");
    }
    return ReinforcementSets(problem.num_controls(), controls);
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shared backward-induction machinery: epoch basis matrices, reinforcement
// columns, grouped least-squares solves and on-path Bellman values.
class Trainer {
public:
    Trainer(ValueHierarchy& h, const PathSet& train, const SolverOptions& options)
        : h_(h), train_(train), options_(options), paths_(train.num_paths()),
          controls_(h.problem().num_controls()), K_(h.basis().size()) {
        const ControlProblem& p = h.problem();
        p.validate();
        if (p.horizon() < 1) throw std::invalid_argument("solver: horizon J must be >= 1");
        if (train.horizon() != p.horizon()) throw std::invalid_argument("solver: training paths do not match J");
        if (train.dim() != p.state_dim()) throw std::invalid_argument("solver: training paths do not match d");
        if (paths_ < 1) throw std::invalid_argument("solver: need at least one training path");
        h_.train_seed = train.seed();
        h_.training_counters.path_simulations += paths_ * train.num_dates();
    }

    // v_J(y, X_J) for every path and control.
    RowMatrix terminal_targets() {
        RowMatrix T(static_cast<Eigen::Index>(paths_), static_cast<Eigen::Index>(controls_));
        const int J = h_.horizon();
        for_paths([&](Evaluator& ev, std::size_t m) {
            ev.terminal(train_.state(m, static_cast<std::size_t>(J)), row(T, m));
        });
        return T;
    }

    // Trains cell (level, j) on `targets`; returns v^(level)_j at the training
    // states of epoch j when requested.
    RowMatrix train_cell(int level, int j, const RowMatrix& targets, bool want_values) {
        prepare_epoch(j);
        RowMatrix columns;
        if (level > 0) {
            columns.resize(static_cast<Eigen::Index>(paths_), static_cast<Eigen::Index>(controls_));
            const auto before = collected_.value_cells;
            for_paths([&](Evaluator& ev, std::size_t m) {
                const auto v = ev.values(level - 1, j + 1, state(m, j));
                std::copy(v.begin(), v.end(), row(columns, m).begin());
            });
            h_.training_counters.reinforcement_evals += collected_.value_cells - before;
        }

        // Controls sharing a reinforcement set share the design and its factorization.
        std::map<std::vector<std::size_t>, std::vector<std::size_t>> groups;
        const auto& sets = h_.reinforcement_sets();
        for (std::size_t y = 0; y < controls_; ++y) {
            groups[level > 0 ? sets[y] : std::vector<std::size_t>{}].push_back(y);
        }

        std::vector<std::vector<double>> coefficients(controls_);
        std::vector<double> residuals(controls_, 0.0);
        const auto rows = static_cast<Eigen::Index>(paths_);
        for (const auto& [set, ys] : groups) {
            const auto width = static_cast<Eigen::Index>(K_ + set.size());
            Eigen::MatrixXd A(rows, width);
            A.leftCols(static_cast<Eigen::Index>(K_)) = psi_;
            for (std::size_t r = 0; r < set.size(); ++r) {
                A.col(static_cast<Eigen::Index>(K_ + r)) = columns.col(static_cast<Eigen::Index>(set[r]));
            }
            Eigen::MatrixXd rhs(rows, static_cast<Eigen::Index>(ys.size()));
            for (std::size_t c = 0; c < ys.size(); ++c) {
                rhs.col(static_cast<Eigen::Index>(c)) = targets.col(static_cast<Eigen::Index>(ys[c]));
            }
            auto fits = fit_least_squares(A, rhs, options_.lsq);
            for (std::size_t c = 0; c < ys.size(); ++c) {
                const auto& g = fits[c].coefficients;
                coefficients[ys[c]].assign(g.data(), g.data() + g.size());
                residuals[ys[c]] = fits[c].residual_ss / static_cast<double>(paths_);
            }
            auto& counters = h_.training_counters;
            counters.lsq_solves += ys.size();
            counters.lsq_rows += ys.size() * paths_;
            counters.lsq_widths[static_cast<std::size_t>(width)] += ys.size();
        }
        h_.set_cell(level, j, std::move(coefficients), std::move(residuals));

        RowMatrix values;
        if (want_values) {
            values.resize(rows, static_cast<Eigen::Index>(controls_));
            for_paths([&](Evaluator& ev, std::size_t m) {
                std::vector<double> cont(controls_);
                std::span<const double> inner;
                if (level > 0) inner = row(columns, m);
                ev.continuation_from(level, j, row(psi_rows_, m), inner, cont);
                ev.bellman(j, state(m, j), cont, row(values, m));
            });
        }
        return values;
    }

    // v^(level)_j at the training states of epoch j by full recursive evaluation.
    RowMatrix on_path_values(int level, int j) {
        RowMatrix V(static_cast<Eigen::Index>(paths_), static_cast<Eigen::Index>(controls_));
        for_paths([&](Evaluator& ev, std::size_t m) {
            const auto v = ev.values(level, j, state(m, j));
            std::copy(v.begin(), v.end(), row(V, m).begin());
        });
        return V;
    }

    void finish() { h_.training_counters += collected_; }

private:
    static std::span<double> row(RowMatrix& M, std::size_t m) {
        return {M.data() + m * static_cast<std::size_t>(M.cols()), static_cast<std::size_t>(M.cols())};
    }
    static std::span<const double> row(const RowMatrix& M, std::size_t m) {
        return {M.data() + m * static_cast<std::size_t>(M.cols()), static_cast<std::size_t>(M.cols())};
    }

    State state(std::size_t m, int j) const { return train_.state(m, static_cast<std::size_t>(j)); }

    void prepare_epoch(int j) {
        if (epoch_ == j) return;
        psi_rows_.resize(static_cast<Eigen::Index>(paths_), static_cast<Eigen::Index>(K_));
        parallel_for(paths_, options_.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t m = begin; m < end; ++m) h_.basis().evaluate(state(m, j), row(psi_rows_, m));
        });
        psi_ = psi_rows_;
        h_.training_counters.basis_evals += paths_;
        epoch_ = j;
    }

    template <class Fn>
    void for_paths(Fn&& fn) {
        std::mutex mutex;
        parallel_for(paths_, options_.workers, [&](std::size_t begin, std::size_t end) {
            Evaluator ev(h_);
            for (std::size_t m = begin; m < end; ++m) fn(ev, m);
            std::lock_guard lock(mutex);
            collected_ += ev.counters;
        });
    }

    ValueHierarchy& h_;
    const PathSet& train_;
    const SolverOptions& options_;
    std::size_t paths_;
    std::size_t controls_;
    std::size_t K_;
    int epoch_ = -1;
    RowMatrix psi_rows_;
    Eigen::MatrixXd psi_;
    CostCounters collected_;
};

void keep(ValueHierarchy& h, const SolverOptions& options, int j, const RowMatrix& targets) {
    if (!options.keep_targets) return;
    if (h.training_targets.empty()) h.training_targets.resize(static_cast<std::size_t>(h.horizon()));
    h.training_targets[static_cast<std::size_t>(j)] = targets;
}

ValueHierarchy run_b(std::shared_ptr<const ControlProblem> problem, const PathSet& train, const BasisFamily& basis,
                     const ReinforcementSets& sets, int depth, Algorithm tag, const SolverOptions& options) {
    if (depth < 0) throw std::invalid_argument("solver: depth must be >= 0");
    ValueHierarchy h(std::move(problem), basis, tag, depth, sets, options.truncation);
    Trainer trainer(h, train, options);
    const int J = h.horizon();
    RowMatrix targets = trainer.terminal_targets();
    for (int j = J - 1; j >= 0; --j) {
        keep(h, options, j, targets);
        const int hi = std::min(depth, J - j);
        const int lo = std::min(std::max(0, depth - j), J - j);
        RowMatrix next;
        for (int e = lo; e <= hi; ++e) {
            auto v = trainer.train_cell(e, j, targets, e == hi && j > 0);
            if (e == hi) next = std::move(v);
        }
        targets = std::move(next);
    }
    trainer.finish();
    return h;
}

// One algorithm-A pass for `level`; earlier levels must be complete.
void pass_a(Trainer& trainer, ValueHierarchy& h, int level, const SolverOptions& options, bool keep_pass) {
    const int J = h.horizon();
    RowMatrix targets = trainer.terminal_targets();
    for (int j = J - 1; j >= 0; --j) {
        if (keep_pass) keep(h, options, j, targets);
        if (level <= J - j) {
            targets = trainer.train_cell(level, j, targets, j > 0);
        } else if (j > 0) {
            targets = trainer.on_path_values(level, j);
        }
    }
}

double mean_relative_change(const ValueHierarchy& h, int level) {
    const int J = h.horizon();
    double sum = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < J; ++j) {
        if (level > J - j) continue;
        for (std::size_t y = 0; y < h.problem().num_controls(); ++y) {
            const double prev = h.residual(level - 1, j, y);
            if (!(prev > 1e-300)) continue;
            sum += std::abs(h.residual(level, j, y) - prev) / prev;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

} // namespace

ValueHierarchy solve_standard(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                              const BasisFamily& basis, const SolverOptions& options) {
    const auto sets = default_reinforcement(*problem);
    return run_b(std::move(problem), train, basis, sets, 0, Algorithm::standard, options);
}

ValueHierarchy solve_hrr_b(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets, int depth,
                           const SolverOptions& options) {
    return run_b(std::move(problem), train, basis, sets, depth, Algorithm::hrr_b, options);
}

ValueHierarchy solve_rr_diagonal(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                                 const BasisFamily& basis, const ReinforcementSets& sets,
                                 const SolverOptions& options) {
    const int J = problem->horizon();
    return run_b(std::move(problem), train, basis, sets, J, Algorithm::rr_diagonal, options);
}

ValueHierarchy solve_hrr_a(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets, int depth,
                           const SolverOptions& options) {
    if (depth < 0) throw std::invalid_argument("solver: depth must be >= 0");
    ValueHierarchy h(std::move(problem), basis, Algorithm::hrr_a, depth, sets, options.truncation);
    Trainer trainer(h, train, options);
    for (int level = 0; level <= depth; ++level) pass_a(trainer, h, level, options, level == depth);
    trainer.finish();
    return h;
}

ValueHierarchy solve_hrr_a(std::shared_ptr<const ControlProblem> problem, const PathSet& train,
                           const BasisFamily& basis, const ReinforcementSets& sets,
                           const AdaptiveTermination& termination, const SolverOptions& options) {
    const int J = problem->horizon();
    const int max_depth = termination.max_depth > 0 ? termination.max_depth : J;
    ValueHierarchy h(std::move(problem), basis, Algorithm::hrr_a, max_depth, sets, options.truncation);
    Trainer trainer(h, train, options);
    pass_a(trainer, h, 0, options, max_depth == 0);
    int level = 0;
    while (level < max_depth) {
        ++level;
        pass_a(trainer, h, level, options, true);
        if (level >= J || mean_relative_change(h, level) < termination.threshold) break;
    }
    h.set_depth(level);
    trainer.finish();
    return h;
}

} // namespace hrr
