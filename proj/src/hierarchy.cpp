#include "hrr/hierarchy.hpp"

#include "hrr/regression.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hrr {

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::standard: return "standard";
    case Algorithm::hrr_a: return "hrr_a";
    case Algorithm::hrr_b: return "hrr_b";
    case Algorithm::rr_diagonal: return "rr_diagonal";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "standard") return Algorithm::standard;
    if (name == "hrr_a") return Algorithm::hrr_a;
    if (name == "hrr_b") return Algorithm::hrr_b;
    if (name == "rr_diagonal") return Algorithm::rr_diagonal;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

CostCounters& CostCounters::operator+=(const CostCounters& o) {
    path_simulations += o.path_simulations;
    basis_evals += o.basis_evals;
    cash_flow_evals += o.cash_flow_evals;
    value_cells += o.value_cells;
    continuation_cells += o.continuation_cells;
    reinforcement_evals += o.reinforcement_evals;
    lsq_solves += o.lsq_solves;
    lsq_rows += o.lsq_rows;
    for (const auto& [w, n] : o.lsq_widths) lsq_widths[w] += n;
    return *this;
}

nlohmann::json CostCounters::to_json() const {
    nlohmann::json widths = nlohmann::json::object();
    for (const auto& [w, n] : lsq_widths) widths[std::to_string(w)] = n;
    return {{"path_simulations", path_simulations},
            {"basis_evals", basis_evals},
            {"cash_flow_evals", cash_flow_evals},
            {"value_cells", value_cells},
            {"continuation_cells", continuation_cells},
            {"reinforcement_evals", reinforcement_evals},
            {"lsq_solves", lsq_solves},
            {"lsq_rows", lsq_rows},
            {"lsq_widths", widths}};
}

// ---------------------------------------------------------------------------

ValueHierarchy::ValueHierarchy(std::shared_ptr<const ControlProblem> problem, BasisFamily basis,
                               Algorithm algorithm, int depth, ReinforcementSets sets, TruncationOptions truncation)
    : problem_(std::move(problem)), basis_(std::move(basis)), algorithm_(algorithm), depth_(0),
      sets_(std::move(sets)), truncation_(truncation) {
    if (!problem_) throw std::invalid_argument("hierarchy: null problem");
    if (basis_.dim() != problem_->state_dim()) throw std::invalid_argument("hierarchy: basis/state dimension mismatch");
    if (sets_.size() != problem_->num_controls()) {
        throw std::invalid_argument("hierarchy: need one reinforcement set per control");
    }
    for (const auto& s : sets_) {
        for (std::size_t y : s) {
            if (y >= problem_->num_controls()) throw std::invalid_argument("hierarchy: reinforcement control not in L");
        }
    }
    if (truncation_.enabled && !(truncation_.cash_flow_bound > 0.0)) {
        throw std::invalid_argument("hierarchy: truncation needs a positive cash-flow bound");
    }
    set_depth(depth);
}

void ValueHierarchy::set_depth(int depth) {
    if (depth < 0) throw std::invalid_argument("hierarchy: depth must be >= 0");
    depth_ = depth;
    const int J = problem_->horizon();
    cells_.resize(static_cast<std::size_t>(std::min(depth, J)) + 1);
    for (auto& row : cells_) row.resize(static_cast<std::size_t>(J));
}

std::optional<double> ValueHierarchy::truncation_bound() const {
    if (!truncation_.enabled) return std::nullopt;
    return horizon() * truncation_.cash_flow_bound;
}

int ValueHierarchy::effective_level(int i, int j) const {
    const int J = horizon();
    if (i < 0 || i > depth_) throw std::out_of_range("hierarchy: level out of range");
    if (j < 0 || j > J) throw std::out_of_range("hierarchy: epoch out of range");
    return j == J ? i : std::min(i, J - j);
}

bool ValueHierarchy::computed(int i, int j) const {
    const int e = effective_level(i, j);
    if (j == horizon()) return true;
    return cells_[static_cast<std::size_t>(e)][static_cast<std::size_t>(j)].computed;
}

const ValueHierarchy::Cell& ValueHierarchy::cell(int i, int j) const {
    if (j >= horizon()) throw std::out_of_range("hierarchy: no regression at the terminal epoch");
    const int e = effective_level(i, j);
    const Cell& c = cells_[static_cast<std::size_t>(e)][static_cast<std::size_t>(j)];
    if (!c.computed) {
        throw std::logic_error("hierarchy: cell (level " + std::to_string(i) + ", epoch " + std::to_string(j) +
                               ") was skipped during training");
    }
    return c;
}

const std::vector<double>& ValueHierarchy::coefficients(int i, int j, std::size_t y) const {
    return cell(i, j).coefficients.at(y);
}

double ValueHierarchy::residual(int i, int j, std::size_t y) const { return cell(i, j).residuals.at(y); }

void ValueHierarchy::set_cell(int level, int j, std::vector<std::vector<double>> coefficients,
                              std::vector<double> residuals) {
    if (level < 0 || static_cast<std::size_t>(level) >= cells_.size() || j < 0 || j >= horizon()) {
        throw std::out_of_range("hierarchy: cell out of range");
    }
    if (level > horizon() - j) throw std::logic_error("hierarchy: level aliases a lower one at this epoch");
    if (coefficients.size() != problem_->num_controls()) throw std::invalid_argument("hierarchy: one coefficient set per control");
    for (std::size_t y = 0; y < coefficients.size(); ++y) {
        const std::size_t expect = basis_.size() + (level > 0 ? sets_[y].size() : 0);
        if (coefficients[y].size() != expect) throw std::invalid_argument("hierarchy: coefficient length mismatch");
    }
    Cell& c = cells_[static_cast<std::size_t>(level)][static_cast<std::size_t>(j)];
    c.computed = true;
    c.coefficients = std::move(coefficients);
    c.residuals = std::move(residuals);
    c.residuals.resize(problem_->num_controls(), 0.0);
}

nlohmann::json ValueHierarchy::to_json() const {
    nlohmann::json cells = nlohmann::json::array();
    nlohmann::json skipped = nlohmann::json::array();
    for (std::size_t e = 0; e < cells_.size(); ++e) {
        for (std::size_t j = 0; j < cells_[e].size(); ++j) {
            if (static_cast<int>(e) > horizon() - static_cast<int>(j)) continue;
            const Cell& c = cells_[e][j];
            if (!c.computed) {
                skipped.push_back({e, j});
                continue;
            }
            cells.push_back({{"level", e}, {"epoch", j}, {"coefficients", c.coefficients}, {"residuals", c.residuals}});
        }
    }
    return {{"format", "hrr-value-hierarchy"},
            {"version", 1},
            {"problem", problem_->descriptor()},
            {"basis", basis_.descriptor()},
            {"algorithm", to_string(algorithm_)},
            {"depth", depth_},
            {"reinforcement_sets", sets_},
            {"truncation", {{"enabled", truncation_.enabled}, {"cash_flow_bound", truncation_.cash_flow_bound}}},
            {"seeds", {{"train", train_seed}}},
            {"training_counters", training_counters.to_json()},
            {"skipped", skipped},
            {"cells", cells}};
}

ValueHierarchy ValueHierarchy::from_json(const nlohmann::json& doc) {
    if (doc.value("format", std::string()) != "hrr-value-hierarchy") {
        throw std::invalid_argument("not a value hierarchy document");
    }
    TruncationOptions trunc;
    trunc.enabled = doc.at("truncation").at("enabled").get<bool>();
    trunc.cash_flow_bound = doc.at("truncation").at("cash_flow_bound").get<double>();
    ValueHierarchy h(make_problem(doc.at("problem")), BasisFamily::from_descriptor(doc.at("basis")),
                     parse_algorithm(doc.at("algorithm").get<std::string>()), doc.at("depth").get<int>(),
                     doc.at("reinforcement_sets").get<ReinforcementSets>(), trunc);
    h.train_seed = doc.at("seeds").at("train").get<std::uint64_t>();
    for (const auto& c : doc.at("cells")) {
        h.set_cell(c.at("level").get<int>(), c.at("epoch").get<int>(),
                   c.at("coefficients").get<std::vector<std::vector<double>>>(),
                   c.at("residuals").get<std::vector<double>>());
    }
    const auto& tc = doc.at("training_counters");
    h.training_counters.path_simulations = tc.at("path_simulations").get<std::uint64_t>();
    h.training_counters.basis_evals = tc.at("basis_evals").get<std::uint64_t>();
    h.training_counters.cash_flow_evals = tc.at("cash_flow_evals").get<std::uint64_t>();
    h.training_counters.value_cells = tc.at("value_cells").get<std::uint64_t>();
    h.training_counters.continuation_cells = tc.at("continuation_cells").get<std::uint64_t>();
    h.training_counters.reinforcement_evals = tc.at("reinforcement_evals").get<std::uint64_t>();
    h.training_counters.lsq_solves = tc.at("lsq_solves").get<std::uint64_t>();
    h.training_counters.lsq_rows = tc.at("lsq_rows").get<std::uint64_t>();
    for (const auto& [w, n] : tc.at("lsq_widths").items()) {
        h.training_counters.lsq_widths[std::stoul(w)] = n.get<std::uint64_t>();
    }
    return h;
}

void ValueHierarchy::save(const std::filesystem::path& file) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
    os << to_json().dump(1) << '\n';
}

ValueHierarchy ValueHierarchy::load(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open " + file.string());
    return from_json(nlohmann::json::parse(is));
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const ValueHierarchy& hierarchy)
    : h_(hierarchy), controls_(hierarchy.problem().num_controls()), psi_(hierarchy.basis().size()),
      zeros_(controls_, 0.0), bound_(hierarchy.truncation_bound()) {
    const std::size_t slots = static_cast<std::size_t>(std::min(h_.depth(), h_.horizon())) + 2;
    values_.assign(slots, std::vector<double>(controls_));
    conts_.assign(slots, std::vector<double>(controls_));
}

void Evaluator::continuation_from(int level, int j, std::span<const double> psi, std::span<const double> inner,
                                  std::span<double> out) {
    const std::size_t K = h_.basis().size();
    const auto& sets = h_.reinforcement_sets();
    for (std::size_t y = 0; y < controls_; ++y) {
        const auto& g = h_.coefficients(level, j, y);
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += g[k] * psi[k];
        if (level > 0) {
            const auto& ly = sets[y];
            for (std::size_t r = 0; r < ly.size(); ++r) s += g[K + r] * inner[ly[r]];
        }
        out[y] = bound_ ? truncate(s, *bound_) : s;
    }
    ++counters.continuation_cells;
}

void Evaluator::bellman(int j, State x, std::span<const double> cont, std::span<double> out) {
    const ControlProblem& p = h_.problem();
    for (std::size_t y = 0; y < controls_; ++y) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a : p.admissible(j, y, x)) {
            const double v = p.cash_flow(j, a, y, x) + cont[p.transition(j, a, y)];
            ++counters.cash_flow_evals;
            if (v > best) best = v;
        }
        out[y] = best;
    }
    ++counters.value_cells;
}

void Evaluator::terminal(State x, std::span<double> out) {
    bellman(h_.horizon(), x, zeros_, out);
}

std::span<const double> Evaluator::value_rec(int i, int j, State x, std::size_t slot) {
    auto& out = values_[slot];
    if (j == h_.horizon()) {
        terminal(x, out);
        return out;
    }
    const auto cont = continuation_rec(i, j, x, slot);
    bellman(j, x, cont, out);
    return out;
}

std::span<const double> Evaluator::continuation_rec(int i, int j, State x, std::size_t slot) {
    const int e = h_.effective_level(i, j);
    std::span<const double> inner;
    if (e > 0) inner = value_rec(e - 1, j + 1, x, slot + 1);
    auto& out = conts_[slot];
    continuation_from(e, j, psi_, inner, out);
    return out;
}

std::span<const double> Evaluator::values(int i, int j, State x) {
    if (j < h_.horizon()) {
        h_.basis().evaluate(x, psi_);
        ++counters.basis_evals;
    }
    return value_rec(i, j, x, 0);
}

std::span<const double> Evaluator::continuations(int i, int j, State x) {
    if (j == h_.horizon()) {
        h_.effective_level(i, j);
        return zeros_;
    }
    h_.basis().evaluate(x, psi_);
    ++counters.basis_evals;
    return continuation_rec(i, j, x, 0);
}

std::size_t Evaluator::greedy_action(int i, int j, std::size_t y, State x) {
    const ControlProblem& p = h_.problem();
    const auto acts = p.admissible(j, y, x);
    if (acts.size() == 1) return acts.front();
    const auto cont = continuations(i, j, x);
    std::size_t best_a = acts.front();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a : acts) {
        const double v = p.cash_flow(j, a, y, x) + cont[p.transition(j, a, y)];
        ++counters.cash_flow_evals;
        if (v > best) {
            best = v;
            best_a = a;
        }
    }
    return best_a;
}

namespace {
void check_control(const ValueHierarchy& h, std::size_t y) {
    if (y >= h.problem().num_controls()) throw std::out_of_range("control index outside L");
}
} // namespace

double eval_value(const ValueHierarchy& h, int i, int j, std::size_t y, State x) {
    check_control(h, y);
    Evaluator ev(h);
    return ev.values(i, j, x)[y];
}

double eval_continuation(const ValueHierarchy& h, int i, int j, std::size_t y, State x) {
    check_control(h, y);
    Evaluator ev(h);
    return ev.continuations(i, j, x)[y];
}

} // namespace hrr
