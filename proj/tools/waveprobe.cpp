#include <CLI11.hpp>

#include <iostream>

#include "wp/runner.hpp"

// exit codes: 0 success, 2 invalid configuration, 3 stage failure;
// CLI parse errors keep CLI11's own (distinct) status
int main(int argc, char** argv) {
    CLI::App app{"waveprobe: probe, measure and reconstruct a time-dependent potential"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int workers = -1;
    bool force = false;
    bool have_seed = false;

    const char* names[] = {"simulate",    "probe",     "carleman", "identity",
                           "lightray",    "reconstruct", "stability",
                           "config-reference"};
    std::vector<CLI::App*> subs;
    for (const char* n : names) {
        CLI::App* s = app.add_subcommand(n);
        s->add_option("--config", config_path, "experiment config file");
        s->add_option("--out", out_dir, "output directory (beats WAVEPROBE_OUT)");
        s->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            have_seed = true;
        });
        s->add_option("--workers", workers, "worker pool size (0 = machine parallelism)");
        s->add_flag("--force", force, "recompute even when outputs are current");
        subs.push_back(s);
    }

    CLI11_PARSE(app, argc, argv);

    std::string sub = app.get_subcommands().front()->get_name();
    try {
        wp::Config cfg =
            config_path.empty() ? wp::Config{} : wp::Config::parse_file(config_path);
        wp::RunOverrides ov;
        ov.out_dir = out_dir;
        ov.have_seed = have_seed;
        ov.seed = seed;
        ov.workers = workers;
        ov.force = force;
        wp::run_subcommand(sub, cfg, ov);
    } catch (const wp::Error& e) {
        std::cerr << "[waveprobe] " << sub << ": " << e.what() << "\n";
        return e.code() == wp::Errc::config_invalid ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "[waveprobe] " << sub << ": " << e.what() << "\n";
        return 3;
    }
    return 0;
}
