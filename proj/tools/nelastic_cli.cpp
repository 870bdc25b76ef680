// Command-line front end: runs one experiment config and reports its records.

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "nelastic/harness.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Nearly-elastic collision experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    unsigned threads = 0;
    std::string out_dir;
    bool assert_results = false;

    CLI::App* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "Override the seed");
    auto* rep_opt = run->add_option("--replicas", replicas, "Override the replica count")->check(CLI::PositiveNumber);
    auto* thr_opt = run->add_option("--threads", threads, "Worker threads, 0 = all cores");
    auto* out_opt = run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--assert", assert_results, "Exit non-zero if any record fails");

    CLI11_PARSE(app, argc, argv);

    try {
        nelastic::RunOverrides o;
        if (*seed_opt) {
            o.seed = seed;
        }
        if (*rep_opt) {
            o.replicas = replicas;
        }
        if (*thr_opt) {
            o.threads = threads;
        }
        if (*out_opt) {
            o.out_dir = out_dir;
        }
        o.assert_results = assert_results;
        const nelastic::ExperimentConfig cfg = nelastic::apply_overrides(nelastic::load_config(config_path), o);
        const nelastic::RunResult res = nelastic::run(cfg);

        std::cout << std::setprecision(6);
        for (const auto& r : res.records) {
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.experiment << " " << r.quantity << " " << r.parameters.dump()
                      << " estimate=" << r.estimate << " ci=[" << r.ci.lo << ", " << r.ci.hi << "]"
                      << " target=" << r.target << " (" << nelastic::to_string(r.comparison)
                      << ", tol=" << r.tolerance << ")" << (r.asserted ? "" : " [not asserted]") << "\n";
        }
        for (const auto& w : res.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
        std::cout << "results written to " << cfg.out_dir << "/results.json\n";
        return cfg.assert_results && !res.all_pass() ? 1 : 0;
    } catch (const nelastic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
