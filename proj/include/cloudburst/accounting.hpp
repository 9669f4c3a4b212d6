#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cloudburst/market.hpp"
#include "cloudburst/pool.hpp"
#include "cloudburst/provisioner.hpp"

namespace cloudburst {

// Per-second billing: price x uptime, no rounding to whole hours.
double billed_cost(double price_per_hour, double t_start, double t_end);

struct BillingRecord {
    std::size_t instance = 0;
    std::size_t group = 0;
    std::size_t gpu_model = 0;
    int gpus = 1;
    double price = 0.0;  // $/hour
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::quiet_NaN();
    double cost = 0.0;
    bool open = true;

    double gpu_seconds() const { return (t_end - t_start) * gpus; }
};

class BillingLedger {
public:
    void open(std::size_t instance, std::size_t group, std::size_t gpu_model, int gpus, double price, double t);
    // Throws SimulationFault when the instance has no open record.
    const BillingRecord& close(std::size_t instance, double t_end);

    // Cost per metric group, counting open records up to t.
    std::vector<double> accrued_by_group(double t, std::size_t n_groups) const;

    std::span<const BillingRecord> records() const { return records_; }
    std::size_t open_count() const { return open_.size(); }

private:
    std::vector<BillingRecord> records_;
    std::unordered_map<std::size_t, std::size_t> open_;  // instance -> record
};

// Breakdown key for time series rows: one per (GPU model, provider, area).
struct MetricGroup {
    std::size_t gpu_model = 0;
    Provider provider = Provider::aws;
    GeoGroup geo = GeoGroup::us_east;
};

// Every group that some region could supply, in a stable order.
std::vector<MetricGroup> enumerate_groups(const Catalog& catalog);

struct MetricsSample {
    double t_s = 0.0;
    std::vector<int> instances;   // per group
    std::vector<int> gpus;        // per group
    std::vector<double> cost_usd; // per group, cumulative
    std::size_t active_fetches = 0;
    std::size_t queue_depth = 0;
    double throughput_gbps = 0.0;
};

class MetricsSeries {
public:
    MetricsSeries() = default;
    MetricsSeries(double period_s, std::vector<MetricGroup> groups, std::vector<GpuModel> models);

    void append(MetricsSample sample);

    double period_s() const { return period_s_; }
    std::span<const MetricGroup> groups() const { return groups_; }
    std::span<const GpuModel> models() const { return models_; }
    std::span<const MetricsSample> samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }

    double group_pflops(const MetricsSample& s, std::size_t group) const;
    double total_pflops(const MetricsSample& s) const;
    double model_pflops(const MetricsSample& s, std::size_t gpu_model) const;

    // GPU counts of one model over time; drives plateau triggers.
    std::span<const SeriesPoint> model_gpu_series(std::size_t gpu_model) const { return model_gpus_.at(gpu_model); }

private:
    double period_s_ = 60.0;
    std::vector<MetricGroup> groups_;
    std::vector<GpuModel> models_;
    std::vector<MetricsSample> samples_;
    std::vector<std::vector<SeriesPoint>> model_gpus_;
};

// Trapezoidal integral of a PFLOP32s series over time, in PFLOP32-hours.
double integrate_pflops_hours(std::span<const SeriesPoint> pflops);
double integrated_pflops(const MetricsSeries& series);
double integrated_pflops(const MetricsSeries& series, std::size_t gpu_model);

struct PlateauStats {
    double level_pflops = 0.0;
    double duration_h = 0.0;
};

// The plateau level is the median of the samples at >= 90% of the peak;
// its duration is the time spent within +-10% of that level.
PlateauStats plateau_stats(std::span<const SeriesPoint> pflops, double period_s);

// (wasted + idle) / billed; zero billed time reports 0.
double waste_fraction(double wasted_gpu_s, double idle_gpu_s, double billed_gpu_s);

struct ModelSummary {
    std::string gpu_model;
    double pflops32_hours = 0.0;
    double cost_usd = 0.0;
    std::size_t completed_jobs = 0;
    std::size_t attempts = 0;
    double billed_gpu_hours = 0.0;
    double useful_gpu_hours = 0.0;
    double wasted_gpu_hours = 0.0;  // non-success attempts
    double idle_gpu_hours = 0.0;
    double waste_fraction = 0.0;
    std::optional<double> usd_per_pflops32_hour;
    double plateau_pflops32 = 0.0;
    double plateau_duration_h = 0.0;
    bool billed = false;  // has a non-zero price
};

struct EffectivenessRow {
    std::string gpu_model;
    double compute_share = 0.0;
    double cost_share = 0.0;
    std::optional<double> effectiveness;
    std::optional<double> usd_per_pflops32_hour;
    bool flagged = false;  // billed model with zero cost share
};

struct FetchStats {
    std::size_t fetches = 0;
    std::size_t below_10s = 0;
    double max_fetch_s = 0.0;
    double peak_sampled_gbps = 0.0;
    double peak_gbps = 0.0;
};

struct Summary {
    ModelSummary total;
    std::vector<ModelSummary> per_model;
    std::vector<EffectivenessRow> effectiveness;
    FetchStats fetch;
    int peak_instances = 0;
    int peak_gpus = 0;
    double peak_gpu_cores = 0.0;
    std::vector<std::string> warnings;
};

struct SummaryInputs {
    const Catalog* catalog = nullptr;
    const MetricsSeries* series = nullptr;
    const BillingLedger* ledger = nullptr;
    const Pool* pool = nullptr;
    double peak_fetch_gbps = 0.0;
};

Summary summarize(const SummaryInputs& in);

// Pool-relative shares: compute_share / cost_share per model.
std::vector<EffectivenessRow> cost_effectiveness(std::span<const ModelSummary> per_model, const ModelSummary& total);

}  // namespace cloudburst
