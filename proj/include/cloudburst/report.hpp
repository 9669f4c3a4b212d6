#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cloudburst/simulation.hpp"

namespace cloudburst {

double round_cents(double usd);
double round_sig(double x, int digits);

// t_sec, gpu_model, provider, geo_group, n_instances, pflops32, active_fetches,
// queue_depth, throughput_gbps, cost_usd (cumulative per group)
std::string timeseries_csv(const RunResult& run);

// job_id, gpu_model, provider, region, submit_s, fetch_s, runtime_s,
// n_attempts, wasted_s, outcome. Jobs that never started are omitted.
std::string jobs_csv(const RunResult& run);

nlohmann::ordered_json summary_json(const RunResult& run, double scale);
std::string summary_text(const RunResult& run);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

void write_run_outputs(const RunResult& run, const std::filesystem::path& dir, double scale);

// Totals rebuilt from the two CSV files alone.
struct CsvTotals {
    double cost_usd = 0.0;
    double pflops32_hours = 0.0;
    std::size_t completed_jobs = 0;
    double wasted_s = 0.0;
    std::map<std::string, double> model_cost_usd;
    std::map<std::string, double> model_pflops32_hours;
    std::map<std::string, std::size_t> model_completed;
};

CsvTotals recompute_from_csv(std::string_view timeseries, std::string_view jobs);

}  // namespace cloudburst
