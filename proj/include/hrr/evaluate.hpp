#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hrr/hierarchy.hpp"
#include "hrr/models.hpp"

namespace hrr {

struct LowerBoundReport {
    double estimate = 0.0;
    double half_width = 0.0; // 3 standard errors
    double std_dev = 0.0;
    std::size_t paths = 0;
    int level = 0;
    std::size_t y0 = 0;
    std::uint64_t train_seed = 0;
    std::uint64_t test_seed = 0;
    double wall_seconds = 0.0;
    CostCounters counters;
    // Realized discounted cash-flow sum per test path, when requested.
    std::vector<double> path_values;

    nlohmann::json to_json() const;
};

struct LowerBoundOptions {
    std::size_t workers = 1;
    std::size_t block_size = 16384;
    bool keep_path_values = false;
};

std::size_t greedy_action(const ValueHierarchy& h, int level, int j, std::size_t y, State x);

// Sum of cash-flows collected by the greedy policy of `level` along one path
// (J+1 states, row-major). Throws std::logic_error on an inadmissible step.
double rollout(Evaluator& evaluator, int level, std::span<const double> path, std::size_t y0);

LowerBoundReport lower_bound(const ValueHierarchy& h, int level, const PathSet& test, std::size_t y0,
                             const LowerBoundOptions& options = {});
// Streams `paths` test paths from `source` in blocks.
LowerBoundReport lower_bound(const ValueHierarchy& h, int level, const PathSource& source, std::size_t paths,
                             std::size_t y0, const LowerBoundOptions& options = {});

// v^(level)_0(y0, x0); not an upper bound in general.
double value_readout(const ValueHierarchy& h, int level, std::size_t y0, State x0);

} // namespace hrr
