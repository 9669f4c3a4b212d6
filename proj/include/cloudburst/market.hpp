#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloudburst/rng.hpp"

namespace cloudburst {

enum class Provider { aws, azure, gcp, onprem };
enum class GeoGroup { us_east, us_west, europe, asia_pacific };

std::string_view to_string(Provider p);
std::string_view to_string(GeoGroup g);
std::optional<Provider> parse_provider(std::string_view text);
std::optional<GeoGroup> parse_geo_group(std::string_view text);

struct GpuModel {
    std::string name;
    double peak_tflops32 = 0.0;  // vendor peak fp32
    int cores = 0;
};

struct InstanceType {
    std::string name;
    Provider provider = Provider::aws;
    std::string gpu_model;
    int gpus_per_instance = 1;
    double ondemand_price = 0.0;  // $/hour
    double spot_fraction = 1.0 / 3.0;
};

// Hourly price actually paid. On-prem resources are never billed.
double spot_price(const InstanceType& it);

// Exponential preemption delay in hours from a uniform u in (0, 1].
// A zero rate never preempts (+infinity).
double sample_preemption_delay(double rate_per_hour, double u);

// Piecewise-constant preemption hazard, in events per hour per instance.
class HazardSchedule {
public:
    struct Step {
        double from_s;
        double rate_per_hour;
    };

    HazardSchedule() = default;
    explicit HazardSchedule(double constant_rate_per_hour);
    explicit HazardSchedule(std::vector<Step> steps);

    double rate_at(double t_s) const;
    const std::vector<Step>& steps() const { return steps_; }

    // Absolute time of the first hazard event after t0_s, by inverting the
    // cumulative hazard at -ln(u). Returns +infinity if it never happens.
    double sample_event_time(double t0_s, double u) const;

    // Scale every rate by k (used by parameter sweeps).
    void scale(double k);

private:
    std::vector<Step> steps_{{0.0, 0.0}};
};

struct ProvisionDelay {
    double median_s = 120.0;
    double sigma_log = 0.5;

    // Lognormal; a zero median means instant.
    double sample(RngStream& rng) const;
};

struct MarketEntry {
    std::string instance_type;
    int capacity_cap = 0;
    HazardSchedule preemption;
    int in_use = 0;
};

// One region's purchasable capacity, per instance type.
class RegionMarket {
public:
    std::string region_id;
    Provider provider = Provider::aws;
    GeoGroup geo_group = GeoGroup::us_east;
    ProvisionDelay provision_delay;
    std::vector<MarketEntry> entries;

    std::optional<std::size_t> find(std::string_view instance_type) const;

    // granted = min(requested, cap - in_use); in_use grows by granted.
    int grant_capacity(std::size_t entry, int requested);
    int grant_capacity(std::string_view instance_type, int requested);
    void release(std::size_t entry, int count);
};

// Immutable-after-load catalog of everything purchasable.
struct Catalog {
    std::vector<GpuModel> gpu_models;
    std::vector<InstanceType> instance_types;
    std::vector<RegionMarket> regions;

    std::optional<std::size_t> find_gpu_model(std::string_view name) const;
    std::optional<std::size_t> find_instance_type(std::string_view name) const;
    std::optional<std::size_t> find_region(std::string_view id) const;

    const GpuModel& gpu_model_of(const InstanceType& it) const;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

}  // namespace cloudburst
