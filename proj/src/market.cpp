#include "cloudburst/market.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

std::string_view to_string(Provider p) {
    switch (p) {
        case Provider::aws: return "AWS";
        case Provider::azure: return "Azure";
        case Provider::gcp: return "GCP";
        case Provider::onprem: return "OnPrem";
    }
    return "?";
}

std::string_view to_string(GeoGroup g) {
    switch (g) {
        case GeoGroup::us_east: return "us-east";
        case GeoGroup::us_west: return "us-west";
        case GeoGroup::europe: return "europe";
        case GeoGroup::asia_pacific: return "asia-pacific";
    }
    return "?";
}

std::optional<Provider> parse_provider(std::string_view text) {
    for (Provider p : {Provider::aws, Provider::azure, Provider::gcp, Provider::onprem}) {
        if (to_string(p) == text) return p;
    }
    return std::nullopt;
}

std::optional<GeoGroup> parse_geo_group(std::string_view text) {
    for (GeoGroup g : {GeoGroup::us_east, GeoGroup::us_west, GeoGroup::europe, GeoGroup::asia_pacific}) {
        if (to_string(g) == text) return g;
    }
    return std::nullopt;
}

double spot_price(const InstanceType& it) {
    if (it.provider == Provider::onprem) return 0.0;
    return it.ondemand_price * it.spot_fraction;
}

double sample_preemption_delay(double rate_per_hour, double u) {
    if (rate_per_hour < 0.0) {
        throw ConfigError(fmt::format("negative preemption rate {}", rate_per_hour));
    }
    if (rate_per_hour == 0.0) return kNever;
    return -std::log(u) / rate_per_hour;
}

HazardSchedule::HazardSchedule(double constant_rate_per_hour) : steps_{{0.0, constant_rate_per_hour}} {}

HazardSchedule::HazardSchedule(std::vector<Step> steps) : steps_(std::move(steps)) {
    if (steps_.empty() || steps_.front().from_s > 0.0) {
        steps_.insert(steps_.begin(), Step{0.0, 0.0});
    }
    std::stable_sort(steps_.begin(), steps_.end(),
                     [](const Step& a, const Step& b) { return a.from_s < b.from_s; });
}

double HazardSchedule::rate_at(double t_s) const {
    double rate = steps_.front().rate_per_hour;
    for (const Step& s : steps_) {
        if (s.from_s <= t_s) rate = s.rate_per_hour;
    }
    return rate;
}

double HazardSchedule::sample_event_time(double t0_s, double u) const {
    // Remaining cumulative hazard to spend, in events.
    double budget = -std::log(u);
    double t = t0_s;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const double end = (i + 1 < steps_.size()) ? steps_[i + 1].from_s : kNever;
        if (end <= t) continue;
        const double rate = steps_[i].rate_per_hour / 3600.0;
        if (rate < 0.0) throw ConfigError("negative preemption rate in schedule");
        if (rate > 0.0) {
            const double dt = budget / rate;
            if (t + dt <= end) return t + dt;
            budget -= rate * (end - t);
        }
        t = end;
    }
    return kNever;
}

void HazardSchedule::scale(double k) {
    for (Step& s : steps_) s.rate_per_hour *= k;
}

double ProvisionDelay::sample(RngStream& rng) const {
    if (median_s <= 0.0) return 0.0;
    return median_s * std::exp(sigma_log * rng.normal());
}

std::optional<std::size_t> RegionMarket::find(std::string_view instance_type) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].instance_type == instance_type) return i;
    }
    return std::nullopt;
}

int RegionMarket::grant_capacity(std::size_t entry, int requested) {
    MarketEntry& e = entries.at(entry);
    const int granted = std::max(0, std::min(requested, e.capacity_cap - e.in_use));
    e.in_use += granted;
    return granted;
}

int RegionMarket::grant_capacity(std::string_view instance_type, int requested) {
    const auto idx = find(instance_type);
    if (!idx) {
        throw ConfigError(fmt::format("region {} does not sell {}", region_id, instance_type));
    }
    return grant_capacity(*idx, requested);
}

void RegionMarket::release(std::size_t entry, int count) {
    MarketEntry& e = entries.at(entry);
    if (count > e.in_use) {
        throw SimulationFault(fmt::format("region {}: releasing {} of {} while only {} in use", region_id,
                                          count, e.instance_type, e.in_use));
    }
    e.in_use -= count;
}

std::optional<std::size_t> Catalog::find_gpu_model(std::string_view name) const {
    for (std::size_t i = 0; i < gpu_models.size(); ++i) {
        if (gpu_models[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Catalog::find_instance_type(std::string_view name) const {
    for (std::size_t i = 0; i < instance_types.size(); ++i) {
        if (instance_types[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Catalog::find_region(std::string_view id) const {
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i].region_id == id) return i;
    }
    return std::nullopt;
}

const GpuModel& Catalog::gpu_model_of(const InstanceType& it) const {
    const auto idx = find_gpu_model(it.gpu_model);
    if (!idx) throw ConfigError(fmt::format("unknown GPU model {}", it.gpu_model));
    return gpu_models[*idx];
}

}  // namespace cloudburst
