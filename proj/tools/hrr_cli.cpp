#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hrr/experiment.hpp"

namespace {

struct Overrides {
    std::optional<std::size_t> train_paths;
    std::optional<std::size_t> test_paths;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth;
    std::optional<std::size_t> workers;
    std::optional<double> cash_flow_bound;
    std::string out;
    bool counters = false;
    bool truncate = false;
    bool dry_run = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--train-paths", o.train_paths, "Training paths M");
    cmd->add_option("--test-paths", o.test_paths, "Test paths M_test");
    cmd->add_option("--seed", o.seed, "Training seed; the test seed is seed + 1");
    cmd->add_option("--depth", o.depth, "Depth I for every non-standard run");
    cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "Output prefix; writes <prefix>.csv and <prefix>.json");
    cmd->add_flag("--counters", o.counters, "Include full cost counters in the JSON output");
    cmd->add_flag("--truncate", o.truncate, "Clip values to [-W, W], W = J * C_H");
    cmd->add_option("--cash-flow-bound", o.cash_flow_bound, "C_H used by --truncate");
    cmd->add_flag("--dry-run", o.dry_run, "Print the resolved configuration and exit");
    cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

void apply(hrr::ExperimentConfig& c, const Overrides& o) {
    if (o.train_paths) c.train_paths = *o.train_paths;
    if (o.test_paths) c.test_paths = *o.test_paths;
    if (o.seed) {
        c.seed_train = *o.seed;
        c.seed_test = *o.seed + 1;
    }
    if (o.depth) {
        for (auto& run : c.runs) {
            if (run.method == hrr::Algorithm::hrr_a || run.method == hrr::Algorithm::hrr_b) {
                run.depth = *o.depth;
                run.adaptive = false;
            }
        }
    }
    if (o.workers) c.workers = *o.workers;
    if (o.counters) c.counters = true;
    if (o.truncate) c.truncation = true;
    if (o.cash_flow_bound) c.cash_flow_bound = *o.cash_flow_bound;
    if (!o.out.empty()) c.output = o.out;
    if (c.output.empty()) {
        const char* dir = std::getenv("HRR_OUTPUT_DIR");
        c.output = (std::filesystem::path(dir && *dir ? dir : "results") / c.name).string();
    }
    hrr::validate(c);
}

int execute(hrr::ExperimentConfig config, const Overrides& o) {
    apply(config, o);
    if (o.dry_run) {
        std::cout << hrr::to_json(config).dump(2) << "\n";
        return 0;
    }
    const auto records = hrr::run_experiment(config, o.quiet ? nullptr : &std::cerr);
    hrr::emit_results(config, records, config.output);
    std::cout << hrr::format_csv(records);
    if (!o.quiet) std::cerr << "wrote " << config.output << ".csv and " << config.output << ".json\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Least-squares Monte Carlo with hierarchical reinforced regression"};
    app.require_subcommand(1);

    Overrides run_o;
    std::string config_file;
    auto* run = app.add_subcommand("run", "Run an experiment from a JSON configuration file");
    run->add_option("config", config_file, "Configuration file")->required()->check(CLI::ExistingFile);
    add_common(run, run_o);

    Overrides preset_o;
    std::string preset_name;
    bool full_scale = false;
    auto* preset = app.add_subcommand("preset", "Run a built-in configuration");
    preset->add_option("name", preset_name, "Preset name (see 'presets')")->required();
    preset->add_flag("--full-scale", full_scale, "Use the large path counts (1e6/1e7, gas 1e5/1e6)");
    add_common(preset, preset_o);

    auto* list = app.add_subcommand("presets", "List the built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list) {
            for (const auto& name : hrr::preset_names()) std::cout << name << "\n";
            return 0;
        }
        if (*run) return execute(hrr::load_config(config_file), run_o);
        return execute(hrr::preset(preset_name, full_scale), preset_o);
    } catch (const hrr::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hrr::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
