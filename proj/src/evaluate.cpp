#include "hrr/evaluate.hpp"

#include "hrr/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace hrr {

nlohmann::json LowerBoundReport::to_json() const {
    return {{"estimate", estimate},     {"half_width", half_width}, {"std_dev", std_dev},
            {"paths", paths},           {"level", level},           {"y0", y0},
            {"train_seed", train_seed}, {"test_seed", test_seed},   {"wall_seconds", wall_seconds},
            {"counters", counters.to_json()}};
}

std::size_t greedy_action(const ValueHierarchy& h, int level, int j, std::size_t y, State x) {
    Evaluator ev(h);
    return ev.greedy_action(level, j, y, x);
}

double rollout(Evaluator& evaluator, int level, std::span<const double> path, std::size_t y0) {
    const ControlProblem& p = evaluator.hierarchy().problem();
    const int J = p.horizon();
    const std::size_t d = p.state_dim();
    std::size_t y = y0;
    double total = 0.0;
    for (int j = 0; j <= J; ++j) {
        const State x = path.subspan(static_cast<std::size_t>(j) * d, d);
        const std::size_t a = evaluator.greedy_action(level, j, y, x);
        const auto acts = p.admissible(j, y, x);
        if (std::find(acts.begin(), acts.end(), a) == acts.end()) {
            throw std::logic_error("rollout: greedy action is not admissible");
        }
        total += p.cash_flow(j, a, y, x);
        ++evaluator.counters.cash_flow_evals;
        y = p.transition(j, a, y);
        if (y >= p.num_controls()) throw std::logic_error("rollout: control left L");
    }
    return total;
}

namespace {

void check(const ValueHierarchy& h, int level, std::size_t y0, std::uint64_t test_seed, std::size_t dim,
           int horizon) {
    if (level < 0 || level > h.depth()) throw std::invalid_argument("lower_bound: level outside 0..I");
    if (y0 >= h.problem().num_controls()) throw std::invalid_argument("lower_bound: y0 not in L");
    if (test_seed == h.train_seed) throw std::invalid_argument("lower_bound: test seed equals training seed");
    if (dim != h.problem().state_dim()) throw std::invalid_argument("lower_bound: test paths do not match d");
    if (horizon != h.horizon()) throw std::invalid_argument("lower_bound: test paths do not match J");
}

// Welford accumulation in path order, so the result does not depend on
// block size or worker count.
class Accumulator {
public:
    void add(double v) {
        ++n_;
        const double delta = v - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (v - mean_);
    }
    void fill(LowerBoundReport& r) const {
        r.paths = n_;
        r.estimate = mean_;
        r.std_dev = n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1)) : 0.0;
        r.half_width = n_ > 0 ? 3.0 * r.std_dev / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

void run_block(const ValueHierarchy& h, int level, const PathSet& block, std::size_t y0,
               const LowerBoundOptions& options, Accumulator& acc, LowerBoundReport& report) {
    std::vector<double> values(block.num_paths());
    std::mutex mutex;
    parallel_for(block.num_paths(), options.workers, [&](std::size_t begin, std::size_t end) {
        Evaluator ev(h);
        for (std::size_t m = begin; m < end; ++m) values[m] = rollout(ev, level, block.path(m), y0);
        std::lock_guard lock(mutex);
        report.counters += ev.counters;
    });
    for (double v : values) acc.add(v);
    if (options.keep_path_values) report.path_values.insert(report.path_values.end(), values.begin(), values.end());
}

} // namespace

LowerBoundReport lower_bound(const ValueHierarchy& h, int level, const PathSet& test, std::size_t y0,
                             const LowerBoundOptions& options) {
    check(h, level, y0, test.seed(), test.dim(), test.horizon());
    const auto start = std::chrono::steady_clock::now();
    LowerBoundReport report;
    report.level = level;
    report.y0 = y0;
    report.train_seed = h.train_seed;
    report.test_seed = test.seed();
    Accumulator acc;
    run_block(h, level, test, y0, options, acc, report);
    acc.fill(report);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

LowerBoundReport lower_bound(const ValueHierarchy& h, int level, const PathSource& source, std::size_t paths,
                             std::size_t y0, const LowerBoundOptions& options) {
    check(h, level, y0, source.seed(), source.dim(), source.horizon());
    if (options.block_size < 1) throw std::invalid_argument("lower_bound: block size must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    LowerBoundReport report;
    report.level = level;
    report.y0 = y0;
    report.train_seed = h.train_seed;
    report.test_seed = source.seed();
    Accumulator acc;
    for (std::size_t first = 0; first < paths; first += options.block_size) {
        const PathSet block = source.generate(first, std::min(options.block_size, paths - first));
        report.counters.path_simulations += block.num_paths() * block.num_dates();
        run_block(h, level, block, y0, options, acc, report);
    }
    acc.fill(report);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double value_readout(const ValueHierarchy& h, int level, std::size_t y0, State x0) {
    return eval_value(h, level, 0, y0, x0);
}

} // namespace hrr
