#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudburst/scenario.hpp"

namespace testing {

// A one-region, one-GPU-model scenario for controlled experiments.
struct Synthetic {
    int instances = 10;
    double rate_per_h = 0.0;
    double runtime_s = 3600.0;
    double sigma_log = 0.0;
    double horizon_s = 7200.0;
    double rampdown_at_s = 7000.0;
    std::string policy = "immediate_kill";
    std::uint64_t n_jobs = 100;
    double price = 3.0;
    double delay_median_s = 0.0;
    double delay_sigma = 0.0;
    double file_mb = 1e-6;
    double overhead_s = 0.0;
    double epilogue_s = 0.0;
    int baseline = 0;
    double period_s = 60.0;
    double retry_s = 300.0;
};

inline nlohmann::json synthetic_doc(const Synthetic& p) {
    using nlohmann::json;
    json doc;
    doc["name"] = "synthetic";
    doc["seed"] = 7;
    doc["horizon_s"] = p.horizon_s;
    doc["metric_period_s"] = p.period_s;
    doc["gpu_models"] = json::array({{{"name", "G"}, {"peak_tflops32", 10.0}, {"cores", 1000}}});
    doc["instance_types"] = json::array(
        {{{"name", "cloud-g"}, {"provider", "AWS"}, {"gpu_model", "G"}, {"ondemand_price", p.price},
          {"spot_fraction", 1.0 / 3.0}},
         {{"name", "site-g"}, {"provider", "OnPrem"}, {"gpu_model", "G"}, {"ondemand_price", 0.0}}});
    doc["regions"] = json::array(
        {{{"id", "r1"},
          {"provider", "AWS"},
          {"geo_group", "us-east"},
          {"provision_delay", {{"median_s", p.delay_median_s}, {"sigma_log", p.delay_sigma}}},
          {"markets",
           json::array({{{"instance_type", "cloud-g"},
                         {"capacity_cap", p.instances},
                         {"preemption_rate_per_h", p.rate_per_h}}})}},
         {{"id", "site"},
          {"provider", "OnPrem"},
          {"geo_group", "europe"},
          {"provision_delay", {{"median_s", 0.0}, {"sigma_log", 0.0}}},
          {"markets", json::array({{{"instance_type", "site-g"}, {"capacity_cap", p.baseline}}})}}});
    doc["plan"] = {
        {"stages",
         json::array({{{"name", "burst"},
                       {"at_s", 0.0},
                       {"fleets", json::array({{{"name", "fleet"},
                                                {"instance_type", "cloud-g"},
                                                {"target_size", p.instances},
                                                {"regions", json::array({{{"region", "r1"}, {"weight", 1.0}}})}}})}}})},
        {"rampdown_at_s", p.rampdown_at_s},
        {"rampdown_policy", p.policy},
        {"retry_interval_s", p.retry_s}};
    doc["onprem_baseline"] = json::array();
    if (p.baseline > 0) {
        doc["onprem_baseline"].push_back({{"name", "site"},
                                          {"instance_type", "site-g"},
                                          {"target_size", p.baseline},
                                          {"regions", json::array({{{"region", "site"}, {"weight", 1.0}}})}});
    }
    const double cap = p.sigma_log > 0.0 ? 20.0 * p.runtime_s : p.runtime_s;
    doc["workload"] = {{"mode", "empirical"},
                       {"n_jobs", p.n_jobs},
                       {"epilogue_s", p.epilogue_s},
                       {"runtime", {{"G", {{"median_s", p.runtime_s}, {"sigma_log", p.sigma_log}, {"cap_s", cap}}}}}};
    doc["fetch"] = {{"file_mb", p.file_mb},
                    {"server_gbps_cap", 100.0},
                    {"per_client_mbps_cap", 500.0},
                    {"overhead_s", p.overhead_s}};
    return doc;
}

inline cloudburst::Scenario synthetic(const Synthetic& p) { return cloudburst::build_scenario(synthetic_doc(p)); }

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

// Asymptotic critical value of the KS statistic at significance 0.01.
inline double ks_critical_001(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

inline std::string bundled_scenario_path() { return std::string(CLOUDBURST_SOURCE_DIR) + "/scenarios/paper-feb-run.json"; }
inline std::string bundled_ice_path() { return std::string(CLOUDBURST_SOURCE_DIR) + "/scenarios/ice-grid.json"; }

}  // namespace testing
