// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cloudburst/photon.hpp"
#include "cloudburst/report.hpp"
#include "cloudburst/scenario.hpp"
#include "cloudburst/simulation.hpp"
#include "support.hpp"

using namespace cloudburst;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    fmt::print("{} criterion {}: {}\n", ok ? "PASS" : "FAIL", id, detail);
    std::fflush(stdout);
    if (!ok) ++failures;
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const ModelSummary& model(const Summary& s, const std::string& name) {
    for (const ModelSummary& m : s.per_model) {
        if (m.gpu_model == name) return m;
    }
    throw std::runtime_error("no model " + name);
}

const EffectivenessRow& effectiveness(const Summary& s, const std::string& name) {
    for (const EffectivenessRow& r : s.effectiveness) {
        if (r.gpu_model == name) return r;
    }
    throw std::runtime_error("no model " + name);
}

// Hours the total PFLOP32s series spends within +-10% of `level`.
double hours_near(const MetricsSeries& series, double level) {
    double hours = 0.0;
    const auto samples = series.samples();
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double v = series.total_pflops(samples[i]);
        if (std::abs(v - level) <= 0.1 * level) hours += (samples[i].t_s - samples[i - 1].t_s) / 3600.0;
    }
    return hours;
}

// Renewal-reward waste for memoryless preemption and fixed runtime R.
double waste_oracle(double lambda_r) { return 1.0 - lambda_r / std::expm1(lambda_r); }

double simulated_waste(double lambda_r) {
    const double R = 3600.0;
    const int n_instances = 1000;
    const double target_jobs = 1e5;
    testing::Synthetic p;
    p.instances = n_instances;
    p.runtime_s = R;
    p.rate_per_h = lambda_r;
    p.n_jobs = 200000;
    p.rampdown_at_s = std::round(target_jobs * (std::expm1(lambda_r) / lambda_r) * R / n_instances);
    p.horizon_s = p.rampdown_at_s + 2.0 * R;
    p.policy = "drain_at_job_boundary";
    p.retry_s = 60.0;
    const RunResult r = run_simulation(testing::synthetic(p), 20200204);
    return r.summary.total.waste_fraction;
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "cloudburst-acceptance";
    fs::remove_all(work);

    Scenario bundled = load_scenario(testing::bundled_scenario_path());
    const Scenario full = bundled;
    apply_scale(bundled, 0.1);

    const auto t0 = std::chrono::steady_clock::now();
    const RunResult run = run_simulation(bundled, bundled.seed);
    const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Summary& s = run.summary;
    write_run_outputs(run, work / "a", 0.1);

    // 1
    {
        const double hours = hours_near(run.series, 17.0);
        report(1, hours >= 5.0 && wall_s < 60.0,
               fmt::format("{:.2f} h within 10% of 17.0 PFLOP32s (need >= 5), plateau level {:.2f} PF, run took "
                           "{:.1f} s (need < 60)",
                           hours, s.total.plateau_pflops32, wall_s));
    }

    const ModelSummary& t4 = model(s, "T4");
    // 2
    {
        const double share = t4.pflops32_hours / s.total.pflops32_hours;
        report(2, s.total.pflops32_hours >= 100.0 && within(share, 0.30, 0.05),
               fmt::format("{:.1f} PF-h total (need >= 100), T4 share {:.3f} (need 0.30 +- 0.05)",
                           s.total.pflops32_hours, share));
    }
    // 3
    {
        const auto& eff = effectiveness(s, "T4");
        const double e = eff.effectiveness.value_or(NAN);
        const bool ok = within(s.total.cost_usd, 6000.0, 600.0) && within(t4.cost_usd, 900.0, 135.0) &&
                        within(e, 2.0, 0.3);
        report(3, ok,
               fmt::format("total ${:.2f} (need 6000 +- 600), T4 ${:.2f} (need 900 +- 135), T4 effectiveness {:.3f} "
                           "(need 2.0 +- 0.3)",
                           round_cents(s.total.cost_usd), round_cents(t4.cost_usd), e));
    }
    // 4
    {
        bool ok = s.total.waste_fraction < 0.10;
        std::string detail = fmt::format("bundled waste {:.4f} (need < 0.10)", s.total.waste_fraction);
        for (double x : {0.05, 0.1, 0.21}) {
            const double sim = simulated_waste(x);
            const double want = waste_oracle(x);
            ok = ok && within(sim, want, 0.01);
            detail += fmt::format("; lambda*R={}: simulated {:.4f} vs oracle {:.4f}", x, sim, want);
        }
        report(4, ok, detail + " (need +- 0.01)");
    }
    // 5
    {
        const double jobs = static_cast<double>(s.total.completed_jobs);
        const double share = static_cast<double>(t4.completed_jobs) / jobs;
        report(5, within(jobs, 15100.0, 1510.0) && within(share, 1.0 / 3.0, 0.05),
               fmt::format("{} jobs completed (need 15100 +- 1510), T4 share {:.3f} (need 0.333 +- 0.05)",
                           s.total.completed_jobs, share));
    }
    // 6
    {
        const double below = s.fetch.fetches ? static_cast<double>(s.fetch.below_10s) / s.fetch.fetches : 0.0;
        // Full-scale steady state: GPUs per model at their capacity ceiling.
        std::map<std::string, double> gpus;
        for (const RegionMarket& rm : full.catalog.regions) {
            for (const MarketEntry& e : rm.entries) {
                const InstanceType& it = full.catalog.instance_types[*full.catalog.find_instance_type(e.instance_type)];
                gpus[it.gpu_model] += static_cast<double>(e.capacity_cap) * it.gpus_per_instance;
            }
        }
        double n = 0.0, inv = 0.0;
        for (const auto& [m, count] : gpus) {
            n += count;
            inv += count / full.workload.runtime.classes.at(m).median_s;
        }
        const double r_bar = n / inv;
        const double gbps = n * full.fetch.file_mb * 8.0 / r_bar / 1000.0;
        const double cap = bundled.fetch.server_gbps_cap;
        const bool ok = below >= 0.95 && gbps >= 2.0 && gbps <= 5.0 && s.fetch.peak_sampled_gbps <= cap &&
                        s.fetch.peak_gbps <= cap + 1e-9;
        report(6, ok,
               fmt::format("{:.4f} of fetches under 10 s (need >= 0.95); steady state N={:.0f}, R={:.0f} s -> {:.2f} "
                           "Gbps (need 2..5); peak {:.2f} Gbps, sampled peak {:.2f} Gbps (cap {})",
                           below, n, r_bar, gbps, s.fetch.peak_gbps, s.fetch.peak_sampled_gbps, cap));
    }
    // 7
    {
        write_run_outputs(run_simulation(bundled, bundled.seed), work / "b", 0.1);
        bool same = true;
        for (const char* f : {"timeseries.csv", "jobs.csv", "summary.json"}) {
            same = same && slurp(work / "a" / f) == slurp(work / "b" / f);
        }
        report(7, same, same ? "timeseries.csv, jobs.csv and summary.json are byte-identical across two runs"
                             : "outputs differ between two identical runs");
    }
    // 8
    {
        using namespace photon;
        bool ok = true;
        std::string detail;

        const PhotonConfig grid = load_photon_config(testing::bundled_ice_path());
        const BatchResult one = run_batch(20000, grid.source, grid.ice, grid.doms, 1, {1});
        const BatchResult four = run_batch(20000, grid.source, grid.ice, grid.doms, 1, {4});
        const bool conserved = one.n_detected + one.n_absorbed + one.n_escaped == one.n_emitted;
        ok = ok && conserved && one == four;
        detail += fmt::format("grid batch {} detected / {} absorbed / {} escaped, conserved {}, 1 vs 4 threads {}",
                              one.n_detected, one.n_absorbed, one.n_escaped, conserved,
                              one == four ? "identical" : "DIFFERENT");

        const IceModel uniform = IceModel::uniform(1e-9, 0.05, 1e6, -1e6);
        std::vector<double> xs;
        for (int i = 0; i < 10000; ++i) {
            RngStream rng(8, "photon", i);
            Photon ph;
            ph.direction = Vec3{0.6, 0.0, 0.8};
            ph.abs_tau = 1e9;
            xs.push_back(step_to_next_scatter(ph, uniform, rng).length);
        }
        const double ks = testing::ks_statistic(xs, [](double x) { return 1.0 - std::exp(-0.05 * x); });
        const double ks_crit = testing::ks_critical_001(xs.size());
        ok = ok && ks < ks_crit;
        detail += fmt::format("; KS {:.4f} (critical {:.4f})", ks, ks_crit);

        RngStream hg(9, "hg");
        double sum = 0.0;
        for (int i = 0; i < 100000; ++i) sum += sample_scatter({0, 0, 1}, 0.9, hg).z;
        const double mean_cos = sum / 1e5;
        ok = ok && within(mean_cos, 0.9, 0.01);
        detail += fmt::format("; HG mean cos {:.4f} (need 0.90 +- 0.01)", mean_cos);

        const double d = 2.0, r = 0.18, lam = 0.02;
        const std::uint64_t n = 1000000;
        const IceModel absorber = IceModel::uniform(lam, 0.0, 100.0, -100.0);
        const std::vector<Dom> dom{{{d, 0, 0}, r}};
        const BatchResult b = run_batch(n, Source::point({0, 0, 0}), absorber, dom, 2020, {4});
        const double expected = 0.5 * (1.0 - std::sqrt(1.0 - r * r / (d * d))) * std::exp(-lam * d);
        const double sigma = std::sqrt(expected * (1.0 - expected) / n);
        const double got = static_cast<double>(b.n_detected) / n;
        ok = ok && std::abs(got - expected) <= 3.0 * sigma &&
             b.n_detected + b.n_absorbed + b.n_escaped == b.n_emitted;
        detail += fmt::format("; absorber detection {:.6f} vs {:.6f} ({:.2f} sigma)", got, expected,
                              (got - expected) / sigma);
        report(8, ok, detail);
    }
    // 9
    {
        CsvTotals t = recompute_from_csv(slurp(work / "a" / "timeseries.csv"), slurp(work / "a" / "jobs.csv"));
        bool ok = round_cents(t.cost_usd) == round_cents(s.total.cost_usd) &&
                  round_sig(t.pflops32_hours, 3) == round_sig(s.total.pflops32_hours, 3) &&
                  t.completed_jobs == s.total.completed_jobs;
        for (const ModelSummary& m : s.per_model) {
            ok = ok && round_cents(t.model_cost_usd[m.gpu_model]) == round_cents(m.cost_usd) &&
                 round_sig(t.model_pflops32_hours[m.gpu_model], 3) == round_sig(m.pflops32_hours, 3) &&
                 t.model_completed[m.gpu_model] == m.completed_jobs;
        }
        report(9, ok,
               fmt::format("from CSV: ${:.2f}, {} PF-h, {} jobs; summary: ${:.2f}, {} PF-h, {} jobs",
                           round_cents(t.cost_usd), round_sig(t.pflops32_hours, 3), t.completed_jobs,
                           round_cents(s.total.cost_usd), round_sig(s.total.pflops32_hours, 3),
                           s.total.completed_jobs));
    }

    fs::remove_all(work);
    fmt::print("{} of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
