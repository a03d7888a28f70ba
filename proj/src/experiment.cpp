#include "hrr/experiment.hpp"

#include "hrr/basis.hpp"
#include "hrr/solver.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace hrr {

namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("config: '" + label() + "' must be an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) fail(key, "must be a number");
        return v.get<double>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) fail(key, "must be an integer");
        return v.get<std::int64_t>();
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "must be a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) fail(key, "must be true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) fail(key, "must be a string");
        return v.get<std::string>();
    }
    std::string required_string(const std::string& key) {
        if (!has(key)) fail(key, "is required");
        return string(key, "");
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError("config: unknown key '" + key_path(key) + "'");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("config: key '" + key_path(key) + "' " + what);
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

int to_int(Reader& r, const std::string& key, int fallback) {
    const auto v = r.integer(key, fallback);
    if (v < -1000000000 || v > 1000000000) r.fail(key, "is out of range");
    return static_cast<int>(v);
}

std::string problem_type_name(ProblemType t) {
    switch (t) {
    case ProblemType::max_call: return "max_call";
    case ProblemType::multi_stop: return "multi_stop";
    case ProblemType::gas_storage: return "gas_storage";
    }
    return "max_call";
}

void parse_problem(Reader r, ExperimentConfig& c) {
    const std::string type = r.required_string("type");
    if (type == "max_call" || type == "multi_stop") {
        c.problem_type = type == "max_call" ? ProblemType::max_call : ProblemType::multi_stop;
        StoppingSpec& s = c.stopping;
        const std::string payoff = r.string("payoff", "max_call");
        if (payoff == "max_call") {
            s.payoff = PayoffKind::max_call;
        } else if (payoff == "zero") {
            s.payoff = PayoffKind::zero;
        } else {
            r.fail("payoff", "must be max_call or zero");
        }
        s.strike = r.number("strike", s.strike);
        s.rate = r.number("rate", s.rate);
        s.maturity = r.number("maturity", s.maturity);
        s.exercise_dates = to_int(r, "exercise_dates", s.exercise_dates);
        s.rights = to_int(r, "rights", type == "max_call" ? 1 : 4);
        s.dim = r.count("dim", s.dim);
        s.in_the_money_only = r.boolean("in_the_money_only", s.in_the_money_only);
        if (type == "max_call" && s.rights != 1) r.fail("rights", "must be 1 for max_call (use multi_stop)");
        if (s.rights < 1) r.fail("rights", "must be >= 1");
        if (s.exercise_dates < 1) r.fail("exercise_dates", "must be >= 1");
        if (s.dim < 1) r.fail("dim", "must be >= 1");
        if (!(s.maturity > 0.0)) r.fail("maturity", "must be > 0");
    } else if (type == "gas_storage") {
        c.problem_type = ProblemType::gas_storage;
        GasStorageSpec& g = c.gas;
        g.granularity = to_int(r, "granularity", g.granularity);
        g.trading_stride = to_int(r, "trading_stride", g.trading_stride);
        g.dates = to_int(r, "dates", g.dates);
        g.rate = r.number("rate", g.rate);
        g.initial_fill = r.number("initial_fill", g.initial_fill);
        if (g.granularity < 1) r.fail("granularity", "must be >= 1");
        if (g.trading_stride < 1) r.fail("trading_stride", "must be >= 1");
        if (g.dates < 1) r.fail("dates", "must be >= 1");
    } else {
        r.fail("type", "must be max_call, multi_stop or gas_storage");
    }
    r.finish();
}

void parse_model(Reader r, ExperimentConfig& c) {
    const std::string type = r.required_string("type");
    const bool gas = c.problem_type == ProblemType::gas_storage;
    if (type == "gbm") {
        if (gas) r.fail("type", "must be oil_gas for gas_storage");
        GbmParams& g = c.gbm;
        g.x0 = r.number("x0", g.x0);
        g.rate = r.number("rate", c.stopping.rate);
        g.dividend = r.number("dividend", g.dividend);
        g.sigma = r.number("sigma", g.sigma);
    } else if (type == "oil_gas") {
        if (!gas) r.fail("type", "must be gbm for stopping problems");
        OilGasParams& o = c.oil_gas;
        o.beta = r.number("beta", o.beta);
        o.alpha1 = r.number("alpha1", o.alpha1);
        o.alpha2 = r.number("alpha2", o.alpha2);
        o.sigma1 = r.number("sigma1", o.sigma1);
        o.sigma2 = r.number("sigma2", o.sigma2);
        o.rho_w = r.number("rho_w", o.rho_w);
        o.lambda = r.number("lambda", o.lambda);
        o.mu1 = r.number("mu1", o.mu1);
        o.mu2 = r.number("mu2", o.mu2);
        o.eta1 = r.number("eta1", o.eta1);
        o.eta2 = r.number("eta2", o.eta2);
        o.rho_j = r.number("rho_j", o.rho_j);
        if (r.has("x0")) {
            const json& x0 = r.raw("x0");
            if (!x0.is_array() || x0.size() != 2 || !x0[0].is_number() || !x0[1].is_number()) {
                r.fail("x0", "must be an array of two numbers");
            }
            o.x0 = {x0[0].get<double>(), x0[1].get<double>()};
        }
        o.euler_steps = to_int(r, "euler_steps", o.euler_steps);
        o.horizon_years = r.number("horizon_years", o.horizon_years);
        o.floor_at_zero = r.boolean("floor_at_zero", o.floor_at_zero);
    } else {
        r.fail("type", "must be gbm or oil_gas");
    }
    r.finish();
}

RunSpec parse_run(Reader r) {
    RunSpec run;
    try {
        run.method = parse_algorithm(r.required_string("method"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        r.fail("method", "must be standard, hrr_a, hrr_b or rr_diagonal");
    }
    run.basis = r.string("basis", run.basis);
    run.depth = to_int(r, "depth", run.method == Algorithm::standard ? 0 : 1);
    run.adaptive = r.boolean("adaptive", false);
    run.threshold = r.number("threshold", run.threshold);
    run.max_depth = to_int(r, "max_depth", 0);
    if (run.depth < 0) r.fail("depth", "must be >= 0");
    if (run.method == Algorithm::standard && run.depth != 0) r.fail("depth", "must be 0 for standard");
    if (run.adaptive && run.method != Algorithm::hrr_a) r.fail("adaptive", "is only supported for hrr_a");
    if (!(run.threshold > 0.0)) r.fail("threshold", "must be > 0");
    if (run.max_depth < 0) r.fail("max_depth", "must be >= 0");
    r.finish();
    return run;
}

json run_to_json(const RunSpec& run) {
    return {{"method", to_string(run.method)}, {"basis", run.basis},         {"depth", run.depth},
            {"adaptive", run.adaptive},        {"threshold", run.threshold}, {"max_depth", run.max_depth}};
}

json problem_to_json(const ExperimentConfig& c) {
    if (c.problem_type == ProblemType::gas_storage) {
        return {{"type", "gas_storage"},
                {"granularity", c.gas.granularity},
                {"trading_stride", c.gas.trading_stride},
                {"dates", c.gas.dates},
                {"rate", c.gas.rate},
                {"initial_fill", c.gas.initial_fill}};
    }
    const StoppingSpec& s = c.stopping;
    return {{"type", problem_type_name(c.problem_type)},
            {"payoff", s.payoff == PayoffKind::zero ? "zero" : "max_call"},
            {"strike", s.strike},
            {"rate", s.rate},
            {"maturity", s.maturity},
            {"exercise_dates", s.exercise_dates},
            {"rights", s.rights},
            {"dim", s.dim},
            {"in_the_money_only", s.in_the_money_only}};
}

json model_to_json(const ExperimentConfig& c) {
    if (c.problem_type == ProblemType::gas_storage) {
        const OilGasParams& o = c.oil_gas;
        return {{"type", "oil_gas"},       {"beta", o.beta},
                {"alpha1", o.alpha1},      {"alpha2", o.alpha2},
                {"sigma1", o.sigma1},      {"sigma2", o.sigma2},
                {"rho_w", o.rho_w},        {"lambda", o.lambda},
                {"mu1", o.mu1},            {"mu2", o.mu2},
                {"eta1", o.eta1},          {"eta2", o.eta2},
                {"rho_j", o.rho_j},        {"x0", {o.x0[0], o.x0[1]}},
                {"euler_steps", o.euler_steps}, {"horizon_years", o.horizon_years},
                {"floor_at_zero", o.floor_at_zero}};
    }
    const GbmParams& g = c.gbm;
    return {{"type", "gbm"}, {"x0", g.x0}, {"rate", g.rate}, {"dividend", g.dividend}, {"sigma", g.sigma}};
}

// Fills the GBM grid from the stopping problem.
void sync_model(ExperimentConfig& c) {
    if (c.problem_type == ProblemType::gas_storage) return;
    c.gbm.dim = c.stopping.dim;
    c.gbm.maturity = c.stopping.maturity;
    c.gbm.dates = c.stopping.exercise_dates;
}

ExperimentConfig base_max_call(const std::string& name, std::size_t dim, int dates) {
    ExperimentConfig c;
    c.name = name;
    c.problem_type = ProblemType::max_call;
    // Three-year maturity; at one year the reference values are out of reach.
    c.stopping = StoppingSpec{PayoffKind::max_call, 100.0, 0.05, 3.0, dates, 1, dim};
    c.gbm.x0 = 100.0;
    c.gbm.rate = 0.05;
    c.gbm.dividend = 0.1;
    c.gbm.sigma = 0.2;
    sync_model(c);
    return c;
}

RunSpec make_run(Algorithm method, const std::string& basis, int depth) {
    RunSpec r;
    r.method = method;
    r.basis = basis;
    r.depth = depth;
    return r;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

void validate(const ExperimentConfig& c) {
    if (c.runs.empty()) throw ConfigError("config: key 'runs' must list at least one run");
    if (c.train_paths < 1) throw ConfigError("config: key 'train_paths' must be >= 1");
    if (c.test_paths < 1) throw ConfigError("config: key 'test_paths' must be >= 1");
    if (c.workers < 1) throw ConfigError("config: key 'workers' must be >= 1");
    if (c.block_size < 1) throw ConfigError("config: key 'block_size' must be >= 1");
    if (c.seed_train == c.seed_test) throw ConfigError("config: key 'seed_test' must differ from 'seed_train'");
    if (c.truncation && !(c.cash_flow_bound > 0.0)) {
        throw ConfigError("config: key 'cash_flow_bound' must be > 0 when truncation is on");
    }
    if (c.ridge < 0.0) throw ConfigError("config: key 'ridge' must be >= 0");
    const auto& r = c.reinforcement;
    if (r.is_string()) {
        const auto s = r.get<std::string>();
        if (s != "default" && s != "all" && s != "self") {
            throw ConfigError("config: key 'reinforcement' must be default, all, self or a list of controls");
        }
    } else if (r.is_array()) {
        for (const auto& v : r) {
            if (!v.is_number()) throw ConfigError("config: key 'reinforcement' entries must be numbers");
        }
    } else {
        throw ConfigError("config: key 'reinforcement' must be default, all, self or a list of controls");
    }
    try {
        if (c.problem_type == ProblemType::gas_storage) {
            hrr::validate(c.oil_gas);
        } else {
            hrr::validate(c.gbm);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: key 'model': ") + e.what());
    }
    const std::size_t dim = c.problem_type == ProblemType::gas_storage ? 2 : c.stopping.dim;
    for (std::size_t k = 0; k < c.runs.size(); ++k) {
        const std::string key = "runs[" + std::to_string(k) + "]";
        try {
            BasisFamily::build(c.runs[k].basis, dim, c.stopping.strike);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config: key '" + key + ".basis': " + e.what());
        }
    }
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig c;
    Reader r(doc, "");
    // Misspelled top-level keys are reported before missing required ones.
    static const std::set<std::string> known{"name",       "problem",   "model",       "runs",     "reinforcement",
                                             "train_paths", "test_paths", "seed_train", "seed_test", "workers",
                                             "block_size",  "counters",  "truncation",  "cash_flow_bound",
                                             "ridge",       "output"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
    }
    c.name = r.string("name", c.name);
    if (!r.has("problem")) r.fail("problem", "is required");
    parse_problem(Reader(r.raw("problem"), "problem"), c);
    sync_model(c);
    if (r.has("model")) {
        parse_model(Reader(r.raw("model"), "model"), c);
    } else if (c.problem_type != ProblemType::gas_storage) {
        c.gbm.rate = c.stopping.rate;
    }
    if (!r.has("runs")) r.fail("runs", "is required");
    const json& runs = r.raw("runs");
    if (!runs.is_array()) r.fail("runs", "must be an array");
    for (std::size_t k = 0; k < runs.size(); ++k) {
        c.runs.push_back(parse_run(Reader(runs[k], "runs[" + std::to_string(k) + "]")));
    }
    if (r.has("reinforcement")) c.reinforcement = r.raw("reinforcement");
    c.train_paths = r.count("train_paths", c.train_paths);
    c.test_paths = r.count("test_paths", c.test_paths);
    c.seed_train = r.count("seed_train", c.seed_train);
    c.seed_test = r.count("seed_test", c.seed_train + 1);
    c.workers = r.count("workers", c.workers);
    c.block_size = r.count("block_size", c.block_size);
    c.counters = r.boolean("counters", c.counters);
    c.truncation = r.boolean("truncation", c.truncation);
    c.cash_flow_bound = r.number("cash_flow_bound", c.cash_flow_bound);
    c.ridge = r.number("ridge", c.ridge);
    c.output = r.string("output", c.output);
    r.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + file.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json runs = json::array();
    for (const auto& run : c.runs) runs.push_back(run_to_json(run));
    return {{"name", c.name},
            {"problem", problem_to_json(c)},
            {"model", model_to_json(c)},
            {"runs", runs},
            {"reinforcement", c.reinforcement},
            {"train_paths", c.train_paths},
            {"test_paths", c.test_paths},
            {"seed_train", c.seed_train},
            {"seed_test", c.seed_test},
            {"workers", c.workers},
            {"block_size", c.block_size},
            {"counters", c.counters},
            {"truncation", c.truncation},
            {"cash_flow_bound", c.cash_flow_bound},
            {"ridge", c.ridge},
            {"output", c.output}};
}

std::string config_hash(const ExperimentConfig& config) {
    // Worker count and output location do not change any numeric result.
    json doc = to_json(config);
    doc.erase("workers");
    doc.erase("output");
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::vector<std::string> preset_names() {
    return {"table1_d2",       "table1_d3",       "table1_d5",       "table1_d10",     "table2_swing",
            "table3_gas",      "jrefine_d4_j9",   "jrefine_d4_j18",  "jrefine_d4_j36", "jrefine_d4_j72"};
}

ExperimentConfig preset(const std::string& name, bool full_scale) {
    ExperimentConfig c;
    if (name.rfind("table1_d", 0) == 0) {
        const std::string d = name.substr(8);
        if (d != "2" && d != "3" && d != "5" && d != "10") throw ConfigError("unknown preset '" + name + "'");
        c = base_max_call(name, std::stoul(d), 9);
        for (const char* b : {"psi1", "psi1g", "psi2", "psi3"}) c.runs.push_back(make_run(Algorithm::standard, b, 0));
        for (const char* b : {"psi1", "psi2"}) {
            c.runs.push_back(make_run(Algorithm::hrr_b, b, 1));
            c.runs.push_back(make_run(Algorithm::hrr_b, b, 9));
        }
    } else if (name == "table2_swing") {
        c.name = name;
        c.problem_type = ProblemType::multi_stop;
        c.stopping = StoppingSpec{PayoffKind::max_call, 100.0, 0.05, 2.0, 24, 4, 5};
        c.gbm.x0 = 100.0;
        c.gbm.rate = 0.05;
        c.gbm.dividend = 0.1;
        c.gbm.sigma = 0.2;
        sync_model(c);
        for (const char* b : {"psi1", "psi1g", "psi2", "psi3"}) c.runs.push_back(make_run(Algorithm::standard, b, 0));
        for (const char* b : {"psi1", "psi2"}) {
            for (int I : {1, 2, 3, 5}) c.runs.push_back(make_run(Algorithm::hrr_b, b, I));
        }
        c.reinforcement = json::array({1, 2, 3, 4});
    } else if (name == "table3_gas") {
        c.name = name;
        c.problem_type = ProblemType::gas_storage;
        c.gas = GasStorageSpec{8, 7, 52, 0.1, 0.5};
        c.oil_gas = OilGasParams{};
        for (const char* b : {"P1(X2)", "P1(X1,X2)", "P2(X2)", "P2(X1,X2)", "P3(X1,X2)", "P4(X1,X2)"}) {
            c.runs.push_back(make_run(Algorithm::standard, b, 0));
        }
        c.runs.push_back(make_run(Algorithm::hrr_b, "P1(X1,X2)", 1));
        c.reinforcement = json::array({0.5});
        c.train_paths = full_scale ? 100000 : 10000;
        c.test_paths = full_scale ? 1000000 : 100000;
        validate(c);
        return c;
    } else if (name.rfind("jrefine_d4_j", 0) == 0) {
        const std::string j = name.substr(12);
        if (j != "9" && j != "18" && j != "36" && j != "72") throw ConfigError("unknown preset '" + name + "'");
        c = base_max_call(name, 4, std::stoi(j));
        c.runs.push_back(make_run(Algorithm::standard, "psi1", 0));
        c.runs.push_back(make_run(Algorithm::standard, "psi2", 0));
        c.runs.push_back(make_run(Algorithm::hrr_b, "psi1", 2));
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.train_paths = full_scale ? 1000000 : 100000;
    c.test_paths = full_scale ? 10000000 : 200000;
    validate(c);
    return c;
}

std::shared_ptr<const ControlProblem> build_problem(const ExperimentConfig& c) {
    if (c.problem_type == ProblemType::gas_storage) return std::make_shared<GasStorageProblem>(c.gas);
    return std::make_shared<StoppingProblem>(c.stopping);
}

std::size_t initial_control(const ExperimentConfig& c, const ControlProblem& problem) {
    if (c.problem_type == ProblemType::gas_storage) {
        return dynamic_cast<const GasStorageProblem&>(problem).initial_control();
    }
    return problem.control_index(static_cast<double>(c.stopping.rights));
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, std::ostream* log) {
    validate(config);
    const bool gas = config.problem_type == ProblemType::gas_storage;
    std::shared_ptr<const ControlProblem> problem;
    ReinforcementSets sets;
    try {
        problem = build_problem(config);
        problem->validate();
        const auto& r = config.reinforcement;
        if (r.is_array()) {
            std::vector<std::size_t> controls;
            for (const auto& v : r) controls.push_back(problem->control_index(v.get<double>()));
            sets = reinforce_fixed(*problem, controls);
        } else if (r == "all") {
            sets = reinforce_all(*problem);
        } else if (r == "self") {
            sets = reinforce_self(*problem);
        } else {
            sets = default_reinforcement(*problem);
        }
    } catch (const std::exception& e) {
        throw StageError("setup", e.what());
    }
    const std::size_t y0 = initial_control(config, *problem);

    auto start = std::chrono::steady_clock::now();
    PathSet train;
    std::unique_ptr<PathSource> test;
    try {
        if (gas) {
            train = simulate_oil_gas(config.oil_gas, config.train_paths, config.seed_train, config.gas.trading_stride,
                                     config.gas.dates, config.workers);
            test = std::make_unique<OilGasSource>(config.oil_gas, config.seed_test, config.gas.trading_stride,
                                                  config.gas.dates, config.workers);
        } else {
            train = simulate_gbm(config.gbm, config.train_paths, config.seed_train, config.workers);
            test = std::make_unique<GbmSource>(config.gbm, config.seed_test, config.workers);
        }
    } catch (const std::exception& e) {
        throw StageError("simulate", e.what());
    }
    const double t_sim = seconds_since(start);
    if (log) *log << "simulated " << config.train_paths << " training paths in " << fmt("%.3g", t_sim) << " s\n";

    SolverOptions options;
    options.workers = config.workers;
    options.lsq.ridge = config.ridge;
    options.truncation.enabled = config.truncation;
    options.truncation.cash_flow_bound = config.cash_flow_bound;
    LowerBoundOptions lb_options;
    lb_options.workers = config.workers;
    lb_options.block_size = config.block_size;

    std::vector<ResultRecord> records;
    for (const RunSpec& run : config.runs) {
        const std::optional<double> strike =
            gas ? std::nullopt : std::optional<double>(config.stopping.strike);
        const BasisFamily basis = BasisFamily::build(run.basis, problem->state_dim(), strike);

        start = std::chrono::steady_clock::now();
        std::optional<ValueHierarchy> h;
        try {
            switch (run.method) {
            case Algorithm::standard: h.emplace(solve_standard(problem, train, basis, options)); break;
            case Algorithm::hrr_a:
                if (run.adaptive) {
                    h.emplace(solve_hrr_a(problem, train, basis, sets,
                                          AdaptiveTermination{run.threshold, run.max_depth}, options));
                } else {
                    h.emplace(solve_hrr_a(problem, train, basis, sets, run.depth, options));
                }
                break;
            case Algorithm::hrr_b: h.emplace(solve_hrr_b(problem, train, basis, sets, run.depth, options)); break;
            case Algorithm::rr_diagonal: h.emplace(solve_rr_diagonal(problem, train, basis, sets, options)); break;
            }
        } catch (const std::exception& e) {
            throw StageError("train", to_string(run.method) + " " + run.basis + ": " + e.what());
        }
        const double t_train = seconds_since(start);

        ResultRecord rec;
        rec.method = to_string(run.method);
        rec.basis = run.basis;
        rec.d = problem->state_dim();
        rec.J = problem->horizon();
        rec.y_max = problem->controls().back();
        rec.I = h->depth();
        rec.M = config.train_paths;
        rec.M_test = config.test_paths;
        rec.seed_train = config.seed_train;
        rec.seed_test = config.seed_test;
        rec.t_sim_s = t_sim;
        rec.t_train_s = t_train;
        try {
            const LowerBoundReport lb = lower_bound(*h, h->depth(), *test, config.test_paths, y0, lb_options);
            rec.lower_bound = lb.estimate;
            rec.half_width = lb.half_width;
            rec.t_eval_s = lb.wall_seconds;
            rec.eval_counters = lb.counters;
            rec.v0 = value_readout(*h, h->depth(), y0, train.state(0, 0));
        } catch (const std::exception& e) {
            throw StageError("evaluate", to_string(run.method) + " " + run.basis + ": " + e.what());
        }
        rec.train_counters = h->training_counters;
        rec.n_lsq_solves = rec.train_counters.lsq_solves;
        rec.n_basis_evals = rec.train_counters.basis_evals + rec.eval_counters.basis_evals;
        if (log) {
            *log << rec.method << " " << rec.basis << " I=" << rec.I << ": lower bound "
                 << fmt("%.6g", rec.lower_bound) << " +- " << fmt("%.3g", rec.half_width) << ", v0 "
                 << fmt("%.6g", rec.v0) << " (train " << fmt("%.3g", rec.t_train_s) << " s, eval "
                 << fmt("%.3g", rec.t_eval_s) << " s)\n";
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::string csv_header() {
    return "method,basis,d,J,y_max,I,M,M_test,seed_train,seed_test,lower_bound,mc_half_width_997,v0,"
           "t_train_s,t_eval_s,n_lsq_solves,n_basis_evals";
}

std::string format_csv(const std::vector<ResultRecord>& records) {
    std::ostringstream out;
    out << csv_header() << "\n";
    for (const auto& r : records) {
        out << csv_field(r.method) << ',' << csv_field(r.basis) << ',' << r.d << ',' << r.J << ','
            << fmt("%.6g", r.y_max) << ',' << r.I << ',' << r.M << ',' << r.M_test << ',' << r.seed_train << ','
            << r.seed_test << ',' << fmt("%.6g", r.lower_bound) << ',' << fmt("%.3g", r.half_width) << ','
            << fmt("%.6g", r.v0) << ',' << fmt("%.6g", r.t_train_s) << ',' << fmt("%.6g", r.t_eval_s) << ','
            << r.n_lsq_solves << ',' << r.n_basis_evals << "\n";
    }
    return out.str();
}

json results_json(const ExperimentConfig& config, const std::vector<ResultRecord>& records) {
    json rows = json::array();
    for (const auto& r : records) {
        json row = {{"method", r.method},
                    {"basis", r.basis},
                    {"d", r.d},
                    {"J", r.J},
                    {"y_max", r.y_max},
                    {"I", r.I},
                    {"M", r.M},
                    {"M_test", r.M_test},
                    {"seed_train", r.seed_train},
                    {"seed_test", r.seed_test},
                    {"lower_bound", r.lower_bound},
                    {"mc_half_width_997", r.half_width},
                    {"v0", r.v0},
                    {"t_sim_s", r.t_sim_s},
                    {"t_train_s", r.t_train_s},
                    {"t_eval_s", r.t_eval_s},
                    {"n_lsq_solves", r.n_lsq_solves},
                    {"n_basis_evals", r.n_basis_evals}};
        if (config.counters) {
            row["train_counters"] = r.train_counters.to_json();
            row["eval_counters"] = r.eval_counters.to_json();
        }
        rows.push_back(std::move(row));
    }
    return {{"config", to_json(config)}, {"config_hash", config_hash(config)}, {"records", rows}};
}

void emit_results(const ExperimentConfig& config, const std::vector<ResultRecord>& records,
                  const std::filesystem::path& prefix) {
    if (records.empty()) throw std::invalid_argument("emit_results: no records");
    try {
        if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
        const auto write = [](const std::filesystem::path& file, const std::string& text) {
            std::ofstream out(file, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + file.string());
            out << text;
            if (!out) throw std::runtime_error("write failed for " + file.string());
        };
        std::filesystem::path csv = prefix;
        csv += ".csv";
        std::filesystem::path js = prefix;
        js += ".json";
        write(csv, format_csv(records));
        write(js, results_json(config, records).dump(2) + "\n");
    } catch (const std::filesystem::filesystem_error& e) {
        throw StageError("emit", e.what());
    } catch (const std::runtime_error& e) {
        throw StageError("emit", e.what());
    }
}

} // namespace hrr
