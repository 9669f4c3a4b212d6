// Command-line front end: validate, run, sweep, photon.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "cloudburst/errors.hpp"
#include "cloudburst/photon.hpp"
#include "cloudburst/report.hpp"
#include "cloudburst/scenario.hpp"
#include "cloudburst/simulation.hpp"
#include "cloudburst/sweep.hpp"

namespace cb = cloudburst;
namespace fs = std::filesystem;

namespace {

int cmd_validate(const fs::path& config) {
    const auto doc = cb::parse_json_text(cb::read_text_file(config));
    const auto diags = cb::validate_scenario(doc);
    for (const std::string& d : diags) fmt::print("{}\n", d);
    if (!diags.empty()) {
        fmt::print(stderr, "{}: {} problem(s)\n", config.string(), diags.size());
        return 1;
    }
    fmt::print("{}: ok\n", config.string());
    return 0;
}

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, const fs::path& out, double scale,
            bool event_log) {
    cb::Scenario sc = cb::load_scenario(config);
    cb::apply_scale(sc, scale);
    const cb::RunResult r = cb::run_simulation(sc, seed.value_or(sc.seed), {event_log});
    cb::write_run_outputs(r, out, scale);
    fmt::print("{}", cb::summary_text(r));
    fmt::print("outputs written to {}\n", out.string());
    return 0;
}

int cmd_sweep(const fs::path& config, const cb::SweepOptions& opts) {
    const auto doc = cb::parse_json_text(cb::read_text_file(config));
    const auto rows = cb::run_sweep(doc, opts);
    fmt::print("{}", cb::sweep_csv(rows));
    return 0;
}

int cmd_photon(const fs::path& config, std::optional<std::uint64_t> photons, std::optional<std::uint64_t> seed,
               unsigned threads, const std::string& paths) {
    cb::PhotonConfig cfg = cb::load_photon_config(config);
    if (photons) cfg.photons = *photons;
    if (seed) cfg.seed = *seed;
    if (cfg.photons < 1) throw cb::ConfigError("need at least one photon");

    std::vector<cb::photon::PhotonRecord> records;
    cb::photon::BatchOptions opts;
    opts.threads = threads;
    opts.max_steps = cfg.max_steps;
    if (!paths.empty()) opts.records = &records;
    const auto r = cb::photon::run_batch(cfg.photons, cfg.source, cfg.ice, cfg.doms, cfg.seed, opts);

    nlohmann::ordered_json j;
    j["photons"] = r.n_emitted;
    j["seed"] = cfg.seed;
    j["detected"] = r.n_detected;
    j["absorbed"] = r.n_absorbed;
    j["escaped"] = r.n_escaped;
    j["step_limited"] = r.n_step_limited;
    j["total_steps"] = r.total_steps;
    j["mean_path_m"] = r.n_emitted ? r.total_path_m / static_cast<double>(r.n_emitted) : 0.0;
    j["dom_hits"] = r.dom_hits;
    fmt::print("{}\n", j.dump(2));
    if (r.n_step_limited > 0) {
        fmt::print(stderr, "warning: {} photon(s) hit the step limit and were counted as escaped\n",
                   r.n_step_limited);
    }

    if (!paths.empty()) {
        std::string csv = "photon,status,steps,path_m,dom,end_x,end_y,end_z\n";
        for (const auto& p : records) {
            fmt::format_to(std::back_inserter(csv), "{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f}\n", p.index,
                           cb::photon::to_string(p.status), p.steps, p.path_m, p.dom, p.end.x, p.end.y, p.end.z);
        }
        cb::write_atomic(paths, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cloudburst: multi-cloud GPU burst simulator"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    double scale = 1.0;
    std::optional<std::uint64_t> seed;
    bool event_log = false;

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("--config", config, "scenario file")->required();

    auto* run = app.add_subcommand("run", "simulate one scenario");
    run->add_option("--config", config, "scenario file")->required();
    run->add_option("--seed", seed, "root seed (default: the scenario's)");
    run->add_option("--out", out, "output directory");
    run->add_option("--scale", scale, "multiplier for instance counts, caps and jobs")->check(CLI::PositiveNumber);
    run->add_flag("--event-log", event_log, "also write events.log");

    cb::SweepOptions sweep_opts;
    std::vector<std::uint64_t> seeds;
    auto* sweep = app.add_subcommand("sweep", "run a scenario over a list of parameter values");
    sweep->add_option("--config", config, "scenario file")->required();
    sweep->add_option("--param", sweep_opts.param, "slash path to a number, '*' matches any element")->required();
    sweep->add_option("--values", sweep_opts.values, "values to try")->required()->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds to try")->delimiter(',');
    sweep->add_option("--out", out, "output directory");
    sweep->add_option("--scale", scale, "multiplier for instance counts, caps and jobs")->check(CLI::PositiveNumber);
    sweep->add_option("--jobs", sweep_opts.jobs, "parallel runs")->check(CLI::PositiveNumber);

    std::optional<std::uint64_t> photons;
    unsigned threads = 1;
    std::string paths;
    auto* photon = app.add_subcommand("photon", "propagate a photon batch through layered ice");
    photon->add_option("--config", config, "ice and geometry file")->required();
    photon->add_option("--photons", photons, "number of photons");
    photon->add_option("--seed", seed, "root seed");
    photon->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    photon->add_option("--paths", paths, "write per-photon outcomes to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(config);
        if (*run) return cmd_run(config, seed, out, scale, event_log);
        if (*sweep) {
            sweep_opts.out = out;
            sweep_opts.scale = scale;
            sweep_opts.seeds = seeds.empty() ? std::vector<std::uint64_t>{1} : seeds;
            return cmd_sweep(config, sweep_opts);
        }
        if (*photon) return cmd_photon(config, photons, seed, threads, paths);
    } catch (const cb::ParseError& e) {
        fmt::print(stderr, "parse error in {}: {}\n", config, e.what());
        return 1;
    } catch (const cb::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 1;
    } catch (const cb::SimulationFault& e) {
        fmt::print(stderr, "simulation fault: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 0;
}
