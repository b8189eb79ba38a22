// Command-line experiment runner: `simulate` and `real-data` execute a JSON
// config end to end and emit record files; `oracle-check` compares every
// calibration variant against the brute-force linear scan.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "lkconf/errors.hpp"
#include "lkconf/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* copt = cmd->add_option("--config", args.config_path, "JSON experiment config");
    if (config_required) copt->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--format", args.format, "output format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", args.seed, "base seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)")
        ->envname("LKCONF_THREADS");
}

lkconf::ExperimentConfig resolve_config(const CommonArgs& args) {
    lkconf::ExperimentConfig cfg =
        args.config_path.empty() ? lkconf::ExperimentConfig{} : lkconf::load_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.format.empty())
        cfg.format = args.format == "csv" ? lkconf::OutputFormat::Csv : lkconf::OutputFormat::Json;
    if (args.seed_set) cfg.base_seed = args.seed;
    if (args.threads >= 0) cfg.threads = args.threads;
    cfg.validate();
    return cfg;
}

void print_written(const std::vector<std::string>& files) {
    for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"L^k conditional-coverage calibration harness"};
    app.require_subcommand(1);

    CommonArgs sim_args, real_args;
    std::string data_path;
    int check_count = 200;
    std::uint64_t check_seed = 1;

    auto* sim = app.add_subcommand("simulate", "run a simulation experiment");
    add_common(sim, sim_args, false);

    auto* real = app.add_subcommand("real-data", "run the CSV-backed experiment");
    add_common(real, real_args, true);
    real->add_option("--data", data_path, "CSV file (overrides config csv.path)");

    auto* check = app.add_subcommand("oracle-check",
                                     "compare all calibration variants to the linear-scan oracle");
    check->add_option("--count", check_count, "number of random instances");
    check->add_option("--seed", check_seed, "base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const auto cfg = resolve_config(sim_args);
            const auto report = lkconf::run_simulation(cfg);
            print_written(lkconf::emit_report(report, cfg.out_dir, cfg.format));
            return 0;
        }
        if (real->parsed()) {
            auto cfg = resolve_config(real_args);
            cfg.scenario = lkconf::Scenario::Csv;
            if (!data_path.empty()) cfg.csv.path = data_path;
            cfg.validate();
            const auto report = lkconf::run_real_data(cfg);
            print_written(lkconf::emit_report(report, cfg.out_dir, cfg.format));
            return 0;
        }
        const auto result = lkconf::oracle_check(check_count, check_seed);
        std::printf("oracle-check: %d comparisons, %d failures\n", result.total, result.failures);
        for (const auto& d : result.failure_details) std::printf("  %s\n", d.c_str());
        return result.failures == 0 ? 0 : 2;
    } catch (const lkconf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
}
