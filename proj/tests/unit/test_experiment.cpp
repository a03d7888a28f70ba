#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hrr/experiment.hpp"

using namespace hrr;
using nlohmann::json;

namespace {

json small_config() {
    return json::parse(R"({
        "name": "small",
        "problem": {"type": "multi_stop", "dim": 2, "exercise_dates": 4, "maturity": 1.0, "rights": 2},
        "model": {"type": "gbm", "x0": 100, "dividend": 0.1, "sigma": 0.2},
        "runs": [{"method": "standard", "basis": "psi1"},
                 {"method": "hrr_b", "basis": "psi1", "depth": 2},
                 {"method": "hrr_a", "basis": "psi1", "adaptive": true}],
        "train_paths": 800,
        "test_paths": 1000,
        "seed_train": 5
    })");
}

std::string message_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

} // namespace

TEST_CASE("parsing applies defaults and syncs the model grid") {
    const auto c = parse_config(small_config());
    CHECK(c.problem_type == ProblemType::multi_stop);
    CHECK(c.stopping.rights == 2);
    CHECK(c.gbm.dates == 4);
    CHECK(c.gbm.dim == 2);
    CHECK(c.gbm.rate == 0.05);
    CHECK(c.seed_test == 6);
    CHECK(c.runs.size() == 3);
    CHECK(c.runs[2].adaptive);
}

TEST_CASE("diagnostics name the offending key") {
    auto doc = small_config();
    doc["problem"]["strik"] = 100;
    CHECK(message_of(doc).find("problem.strik") != std::string::npos);

    doc = small_config();
    doc["train_paths"] = "many";
    CHECK(message_of(doc).find("train_paths") != std::string::npos);

    doc = small_config();
    doc["runs"][0]["method"] = "magic";
    CHECK(message_of(doc).find("method") != std::string::npos);

    doc = small_config();
    doc["seed_test"] = 5;
    CHECK(message_of(doc).find("seed_test") != std::string::npos);

    doc = small_config();
    doc["test_paths"] = 0;
    CHECK(message_of(doc).find("test_paths") != std::string::npos);

    doc = small_config();
    doc["model"]["type"] = "oil_gas";
    CHECK(message_of(doc).find("model.type") != std::string::npos);
}

TEST_CASE("canonical JSON round trips to the same hash") {
    const auto c = parse_config(small_config());
    const auto again = parse_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);

    auto other = c;
    other.train_paths = 801;
    CHECK(config_hash(other) != config_hash(c));
    auto threads = c;
    threads.workers = 4;
    CHECK(config_hash(threads) == config_hash(c));

    for (const auto& name : preset_names()) {
        const auto p = preset(name);
        CHECK_NOTHROW(validate(p));
        CHECK(config_hash(parse_config(to_json(p))) == config_hash(p));
    }
}

TEST_CASE("presets carry the experiment parameter sets") {
    const auto t1 = preset("table1_d2");
    CHECK(t1.stopping.dim == 2);
    CHECK(t1.stopping.exercise_dates == 9);
    CHECK(t1.stopping.strike == 100.0);
    CHECK(t1.gbm.x0 == 100.0);
    CHECK(t1.gbm.dividend == 0.1);
    CHECK(t1.gbm.sigma == 0.2);
    CHECK(t1.train_paths == 100000);
    CHECK(t1.test_paths == 200000);
    CHECK(preset("table1_d2", true).train_paths == 1000000);

    const auto sw = preset("table2_swing");
    CHECK(sw.stopping.exercise_dates == 24);
    CHECK(sw.stopping.maturity == 2.0);
    CHECK(sw.stopping.rights == 4);
    CHECK(sw.stopping.dim == 5);
    bool depths[6] = {};
    for (const auto& r : sw.runs) {
        if (r.method == Algorithm::hrr_b && r.basis == "psi1") depths[r.depth] = true;
    }
    CHECK((depths[1] && depths[2] && depths[3] && depths[5]));

    const auto gas = preset("table3_gas");
    CHECK(gas.gas.trading_stride == 7);
    CHECK(gas.gas.dates == 52);
    CHECK(gas.gas.granularity == 8);
    CHECK(gas.gas.initial_fill == 0.5);
    CHECK(gas.gas.rate == 0.1);
    CHECK(gas.oil_gas.x0[0] == 100.0);
    CHECK(gas.oil_gas.x0[1] == 100.0);

    CHECK(preset("jrefine_d4_j36").stopping.exercise_dates == 36);
    CHECK_THROWS_AS(preset("table1_d4"), ConfigError);
}

TEST_CASE("runs are reproducible and emit fixed-format output") {
    const auto c = parse_config(small_config());
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    REQUIRE(a.size() == 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].lower_bound == b[k].lower_bound);
        CHECK(a[k].half_width == b[k].half_width);
        CHECK(a[k].v0 == b[k].v0);
        CHECK(a[k].n_lsq_solves == b[k].n_lsq_solves);
        CHECK(a[k].lower_bound > 0.0);
    }
    CHECK(a[0].I == 0);
    CHECK(a[1].I == 2);
    CHECK(a[0].y_max == 2.0);
    CHECK(a[0].n_lsq_solves == 4 * 3);

    const std::vector<ResultRecord> one{a[0]};
    const auto csv = format_csv(one);
    CHECK(count_lines(csv) == 2);
    CHECK(csv.rfind(csv_header() + "\n", 0) == 0);

    ResultRecord r;
    r.method = "standard";
    r.basis = "P1(X1,X2)";
    r.lower_bound = 13.7723456;
    r.half_width = 0.0152345;
    r.v0 = 78.38149;
    const auto line = format_csv({r});
    CHECK(line.find(",13.7723,0.0152,78.3815,") != std::string::npos);
    CHECK(line.find("\"P1(X1,X2)\"") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "hrr_emit_test";
    std::filesystem::create_directories(dir);
    emit_results(c, a, dir / "out");
    std::ifstream in(dir / "out.json");
    const auto doc = json::parse(in);
    CHECK(doc.at("config_hash") == config_hash(c));
    CHECK(config_hash(parse_config(doc.at("config"))) == config_hash(c));
    CHECK(doc.at("records").size() == 3);
    std::ifstream csv_in(dir / "out.csv");
    std::stringstream ss;
    ss << csv_in.rdbuf();
    CHECK(ss.str() == format_csv(a));
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(emit_results(c, a, "/proc/no/such/dir/out"), StageError);
}

TEST_CASE("gas configuration runs end to end") {
    auto c = preset("table3_gas");
    c.train_paths = 200;
    c.test_paths = 200;
    c.runs.resize(1);
    const auto records = run_experiment(c);
    REQUIRE(records.size() == 1);
    CHECK(records[0].J == 52);
    CHECK(records[0].y_max == 1.0);
    CHECK(records[0].lower_bound > 0.0);
}
