#include "cloudburst/report.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

using nlohmann::ordered_json;

double round_cents(double usd) { return std::round(usd * 100.0) / 100.0; }

double round_sig(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double mag = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
    return std::round(x * mag) / mag;
}

std::string timeseries_csv(const RunResult& run) {
    const MetricsSeries& series = run.series;
    const Catalog& catalog = run.catalog;
    std::string out =
        "t_sec,gpu_model,provider,geo_group,n_instances,pflops32,active_fetches,queue_depth,throughput_gbps,"
        "cost_usd\n";
    for (const MetricsSample& s : series.samples()) {
        for (std::size_t g = 0; g < series.groups().size(); ++g) {
            const MetricGroup& grp = series.groups()[g];
            fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{:.6f},{},{},{:.6f},{:.9f}\n", s.t_s,
                           catalog.gpu_models[grp.gpu_model].name, to_string(grp.provider), to_string(grp.geo),
                           s.instances[g], series.group_pflops(s, g), s.active_fetches, s.queue_depth,
                           s.throughput_gbps, s.cost_usd[g]);
        }
    }
    return out;
}

std::string jobs_csv(const RunResult& run) {
    std::string out = "job_id,gpu_model,provider,region,submit_s,fetch_s,runtime_s,n_attempts,wasted_s,outcome\n";
    for (const Job& job : run.pool.jobs()) {
        if (job.attempts.empty()) continue;
        const Attempt& last = job.attempts.back();
        const SlotInfo& info = run.pool.slot(last.slot).info;
        double wasted = 0.0;
        for (const Attempt& a : job.attempts) {
            if (a.outcome != AttemptOutcome::success) wasted += a.duration();
        }
        fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{:.6f},{:.6f},{},{:.6f},{}\n", job.id,
                       run.catalog.gpu_models[info.gpu_model].name, to_string(info.provider),
                       run.catalog.regions[info.region].region_id, job.submit_s, last.fetch_s, last.runtime_s,
                       job.attempts.size(), wasted, job.state == JobState::completed ? "completed" : "incomplete");
    }
    return out;
}

namespace {

ordered_json optional_number(const std::optional<double>& v, int digits) {
    if (!v) return nullptr;
    return round_sig(*v, digits);
}

ordered_json model_json(const ModelSummary& m) {
    ordered_json j;
    j["gpu_model"] = m.gpu_model;
    j["pflops32_hours"] = round_sig(m.pflops32_hours, 3);
    j["cost_usd"] = round_cents(m.cost_usd);
    j["completed_jobs"] = m.completed_jobs;
    j["attempts"] = m.attempts;
    j["billed_gpu_hours"] = round_sig(m.billed_gpu_hours, 6);
    j["useful_gpu_hours"] = round_sig(m.useful_gpu_hours, 6);
    j["wasted_gpu_hours"] = round_sig(m.wasted_gpu_hours, 6);
    j["idle_gpu_hours"] = round_sig(m.idle_gpu_hours, 6);
    j["waste_fraction"] = round_sig(m.waste_fraction, 4);
    j["usd_per_pflops32_hour"] = m.usd_per_pflops32_hour ? ordered_json(round_cents(*m.usd_per_pflops32_hour))
                                                         : ordered_json(nullptr);
    j["plateau_pflops32"] = round_sig(m.plateau_pflops32, 3);
    j["plateau_duration_h"] = round_sig(m.plateau_duration_h, 3);
    return j;
}

}  // namespace

ordered_json summary_json(const RunResult& run, double scale) {
    const Summary& s = run.summary;
    ordered_json j;
    j["scenario"] = run.scenario.name;
    j["seed"] = run.seed;
    j["scale"] = scale;
    j["horizon_s"] = run.scenario.horizon_s;
    j["total"] = model_json(s.total);
    j["per_model"] = ordered_json::array();
    for (const ModelSummary& m : s.per_model) j["per_model"].push_back(model_json(m));
    j["cost_effectiveness"] = ordered_json::array();
    for (const EffectivenessRow& r : s.effectiveness) {
        ordered_json row;
        row["gpu_model"] = r.gpu_model;
        row["compute_share"] = round_sig(r.compute_share, 4);
        row["cost_share"] = round_sig(r.cost_share, 4);
        row["effectiveness"] = optional_number(r.effectiveness, 3);
        row["usd_per_pflops32_hour"] = r.usd_per_pflops32_hour
                                           ? ordered_json(round_cents(*r.usd_per_pflops32_hour))
                                           : ordered_json(nullptr);
        row["flagged"] = r.flagged;
        j["cost_effectiveness"].push_back(row);
    }
    ordered_json fetch;
    fetch["fetches"] = s.fetch.fetches;
    fetch["share_below_10s"] =
        s.fetch.fetches > 0 ? round_sig(static_cast<double>(s.fetch.below_10s) / s.fetch.fetches, 4) : 0.0;
    fetch["max_fetch_s"] = round_sig(s.fetch.max_fetch_s, 4);
    fetch["peak_gbps"] = round_sig(s.fetch.peak_gbps, 4);
    fetch["peak_sampled_gbps"] = round_sig(s.fetch.peak_sampled_gbps, 4);
    j["fetch"] = fetch;
    ordered_json peaks;
    peaks["instances"] = s.peak_instances;
    peaks["gpus"] = s.peak_gpus;
    peaks["gpu_cores"] = s.peak_gpu_cores;
    j["peaks"] = peaks;
    j["stages"] = ordered_json::array();
    for (const StageRecord& st : run.stages) {
        j["stages"].push_back({{"name", st.name}, {"fired_at_s", optional_number(st.fired_at_s, 6)}});
    }
    j["warnings"] = s.warnings;
    return j;
}

std::string summary_text(const RunResult& run) {
    const Summary& s = run.summary;
    std::string out = fmt::format("scenario {} seed {}: {} jobs completed, {} PFLOP32-hours, ${:.2f}\n",
                                  run.scenario.name, run.seed, s.total.completed_jobs,
                                  round_sig(s.total.pflops32_hours, 3),
                                  round_cents(s.total.cost_usd));
    fmt::format_to(std::back_inserter(out), "plateau {} PFLOP32s for {:.2f} h, waste fraction {:.4f}\n",
                   round_sig(s.total.plateau_pflops32, 3), s.total.plateau_duration_h, s.total.waste_fraction);
    for (std::size_t m = 0; m < s.per_model.size(); ++m) {
        const ModelSummary& ms = s.per_model[m];
        if (ms.attempts == 0 && ms.cost_usd == 0.0 && ms.pflops32_hours == 0.0) continue;
        const EffectivenessRow& r = s.effectiveness[m];
        fmt::format_to(std::back_inserter(out),
                       "  {:<10} {:>8} PF-h  ${:>10.2f}  jobs {:>7}  compute {:5.1f}%  cost {:5.1f}%  eff {}\n",
                       ms.gpu_model, round_sig(ms.pflops32_hours, 3), round_cents(ms.cost_usd), ms.completed_jobs,
                       100.0 * r.compute_share, 100.0 * r.cost_share,
                       r.effectiveness ? fmt::format("{:.2f}", *r.effectiveness) : std::string("-"));
    }
    for (const std::string& w : s.warnings) out += "warning: " + w + "\n";
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

void write_run_outputs(const RunResult& run, const std::filesystem::path& dir, double scale) {
    std::filesystem::create_directories(dir);
    write_atomic(dir / "timeseries.csv", timeseries_csv(run));
    write_atomic(dir / "jobs.csv", jobs_csv(run));
    write_atomic(dir / "summary.json", summary_json(run, scale).dump(2) + "\n");
    if (!run.event_log.empty()) {
        std::string log;
        for (const std::string& line : run.event_log) log += line + "\n";
        write_atomic(dir / "events.log", log);
    }
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

template <class Fn>
void for_each_row(std::string_view text, std::string_view expected_header, Fn&& fn) {
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != expected_header) throw ConfigError(fmt::format("unexpected CSV header '{}'", line));
            header = false;
            continue;
        }
        fn(split_csv_line(line));
    }
}

double to_double(std::string_view s) { return std::stod(std::string(s)); }

}  // namespace

CsvTotals recompute_from_csv(std::string_view timeseries, std::string_view jobs) {
    CsvTotals out;

    // Per time stamp: total PFLOP32s, per-model PFLOP32s and per-model cost.
    struct Row {
        double t;
        double total;
        std::map<std::string, double> pflops;
        std::map<std::string, double> cost;
    };
    std::vector<Row> rows;
    for_each_row(timeseries,
                 "t_sec,gpu_model,provider,geo_group,n_instances,pflops32,active_fetches,queue_depth,"
                 "throughput_gbps,cost_usd",
                 [&](const std::vector<std::string_view>& c) {
                     const double t = to_double(c.at(0));
                     if (rows.empty() || rows.back().t != t) rows.push_back({t, 0.0, {}, {}});
                     const std::string model(c.at(1));
                     const double pf = to_double(c.at(5));
                     rows.back().total += pf;
                     rows.back().pflops[model] += pf;
                     rows.back().cost[model] += to_double(c.at(9));
                 });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double dt_h = (rows[i].t - rows[i - 1].t) / 3600.0;
        out.pflops32_hours += 0.5 * (rows[i].total + rows[i - 1].total) * dt_h;
        for (const auto& [model, pf] : rows[i].pflops) {
            out.model_pflops32_hours[model] += 0.5 * (pf + rows[i - 1].pflops[model]) * dt_h;
        }
    }
    if (!rows.empty()) {
        for (const auto& [model, cost] : rows.back().cost) {
            out.model_cost_usd[model] = cost;
            out.cost_usd += cost;
        }
    }

    for_each_row(jobs, "job_id,gpu_model,provider,region,submit_s,fetch_s,runtime_s,n_attempts,wasted_s,outcome",
                 [&](const std::vector<std::string_view>& c) {
                     out.wasted_s += to_double(c.at(8));
                     if (c.at(9) == "completed") {
                         ++out.completed_jobs;
                         ++out.model_completed[std::string(c.at(1))];
                     }
                 });
    return out;
}

}  // namespace cloudburst
