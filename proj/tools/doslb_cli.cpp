// Command line driver. Subcommands: run, compare, gaps, validate. An
// experiment is described by an optional config file plus flag overrides;
// exit codes: 0 success, 1 usage or config problem, 2 numeric failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "doslb/harness.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string instance;
    std::string out_dir;
    std::string geometry;
    std::vector<std::string> policies;
    std::vector<std::uint64_t> seeds;
    long horizon = -1;
};

void add_experiment_options(CLI::App* sc, CliOverrides& ov) {
    sc->add_option("--config", ov.config_path, "experiment config file");
    sc->add_option("--instance", ov.instance, "instance source (builtin name or file)");
    sc->add_option("--out", ov.out_dir, "output directory");
    sc->add_option("--seeds", ov.seeds, "comma separated seed list")->delimiter(',');
    sc->add_option("--horizon", ov.horizon, "rounds per run");
    sc->add_option("--geometry", ov.geometry, "l1 | linf | ellipsoid-reference");
    sc->add_option("--policy", ov.policies, "doslb | safelts | oracle, repeatable");
}

doslb::ExperimentConfig build_config(const CliOverrides& ov) {
    doslb::ExperimentConfig cfg;
    if (!ov.config_path.empty())
        cfg = doslb::parse_experiment_config(doslb::read_text_file(ov.config_path));
    if (!ov.instance.empty()) cfg.instance_source = ov.instance;
    if (!ov.policies.empty()) cfg.policies = ov.policies;
    if (ov.horizon >= 0) cfg.horizon = ov.horizon;
    if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
    if (!ov.geometry.empty()) cfg.geometry = doslb::geometry_from_string(ov.geometry);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    doslb::validate_experiment_config(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"safe linear bandit experiment driver"};
    app.require_subcommand(1);

    CliOverrides ov;
    std::string source;
    long subset_budget = 65536;

    CLI::App* run = app.add_subcommand("run", "simulate policies and emit CSV/SVG artifacts");
    add_experiment_options(run, ov);
    CLI::App* compare =
        app.add_subcommand("compare", "paired-seed comparison of two or more policies");
    add_experiment_options(compare, ov);
    CLI::App* gaps = app.add_subcommand("gaps", "print the index-set gap table and Xi");
    gaps->add_option("source", source, "instance source")->required();
    gaps->add_option("--subset-budget", subset_budget,
                     "cap on index subset pairs per inconsistency program");
    CLI::App* validate = app.add_subcommand("validate", "check instance assumptions");
    validate->add_option("source", source, "instance source")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gaps->parsed()) return doslb::cmd_gaps(source, std::cout, subset_budget);
        if (validate->parsed()) return doslb::cmd_validate(source, std::cout);
        const doslb::ExperimentConfig cfg = build_config(ov);
        if (run->parsed()) return doslb::cmd_run(cfg, std::cout);
        return doslb::cmd_compare(cfg, std::cout);
    } catch (const doslb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const doslb::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
