#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrr/control.hpp"
#include "hrr/evaluate.hpp"
#include "hrr/hierarchy.hpp"
#include "hrr/models.hpp"
#include "json.hpp"

namespace hrr {

// Invalid configuration; the message names the offending key path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure inside one stage of a run (simulate, train, evaluate, emit).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

enum class ProblemType { max_call, multi_stop, gas_storage };

struct RunSpec {
    Algorithm method = Algorithm::standard;
    std::string basis = "psi1";
    int depth = 0;
    // hrr_a only: choose the depth by the residual-change criterion.
    bool adaptive = false;
    double threshold = 1e-3;
    int max_depth = 0;
};

// Schema (JSON object, unknown keys rejected):
//   name: string
//   problem: {type: max_call|multi_stop, strike, rate, maturity, exercise_dates, rights, dim,
//             payoff: max_call|zero, in_the_money_only}
//          | {type: gas_storage, granularity, trading_stride, dates, rate, initial_fill}
//   model:   {type: gbm, x0, rate, dividend, sigma}            (d, T, J come from the problem)
//          | {type: oil_gas, beta, alpha1, alpha2, sigma1, sigma2, rho_w, lambda, mu1, mu2,
//             eta1, eta2, rho_j, x0: [x1, x2], euler_steps, horizon_years, floor_at_zero}
//   runs: [{method: standard|hrr_a|hrr_b|rr_diagonal, basis, depth, adaptive, threshold, max_depth}]
//   reinforcement: default|all|self|[control values]
//   train_paths, test_paths, seed_train, seed_test, workers, block_size,
//   counters, truncation, cash_flow_bound, ridge, output
struct ExperimentConfig {
    std::string name = "experiment";
    ProblemType problem_type = ProblemType::max_call;
    StoppingSpec stopping;
    GasStorageSpec gas;
    GbmParams gbm;
    OilGasParams oil_gas;
    std::vector<RunSpec> runs;
    nlohmann::json reinforcement = "default";
    std::size_t train_paths = 100000;
    std::size_t test_paths = 200000;
    std::uint64_t seed_train = 1;
    std::uint64_t seed_test = 2;
    std::size_t workers = 1;
    std::size_t block_size = 16384;
    bool counters = false;
    bool truncation = false;
    double cash_flow_bound = 0.0;
    double ridge = 0.0;
    std::string output;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& file);
// Canonical form with every field present; parsing it back gives the same form.
nlohmann::json to_json(const ExperimentConfig& config);
// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
// Checks cross-field invariants; throws ConfigError.
void validate(const ExperimentConfig& config);

std::vector<std::string> preset_names();
// Built-in parameter sets at desk scale; full_scale switches to the large path counts.
ExperimentConfig preset(const std::string& name, bool full_scale = false);

std::shared_ptr<const ControlProblem> build_problem(const ExperimentConfig& config);
// y0: all rights for stopping, the initial fill for gas storage.
std::size_t initial_control(const ExperimentConfig& config, const ControlProblem& problem);

struct ResultRecord {
    std::string method;
    std::string basis;
    std::size_t d = 0;
    int J = 0;
    double y_max = 0.0;
    int I = 0;
    std::size_t M = 0;
    std::size_t M_test = 0;
    std::uint64_t seed_train = 0;
    std::uint64_t seed_test = 0;
    double lower_bound = 0.0;
    double half_width = 0.0;
    double v0 = 0.0;
    double t_sim_s = 0.0;
    double t_train_s = 0.0;
    double t_eval_s = 0.0;
    std::uint64_t n_lsq_solves = 0;
    std::uint64_t n_basis_evals = 0;
    CostCounters train_counters;
    CostCounters eval_counters;
};

// Simulates training paths once, then trains and evaluates every run.
// Progress lines go to `log` when given.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

std::string csv_header();
std::string format_csv(const std::vector<ResultRecord>& records);
nlohmann::json results_json(const ExperimentConfig& config, const std::vector<ResultRecord>& records);
// Writes <prefix>.csv and <prefix>.json.
void emit_results(const ExperimentConfig& config, const std::vector<ResultRecord>& records,
                  const std::filesystem::path& prefix);

} // namespace hrr
