#include "cloudburst/provisioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

bool detect_plateau(std::span<const SeriesPoint> series, double window_s, double rel_epsilon) {
    if (series.empty() || !(window_s > 0.0)) return false;
    const double t = series.back().t_s;
    if (t - series.front().t_s < 2.0 * window_s) return false;

    double last_sum = 0.0, prev_sum = 0.0;
    std::size_t last_n = 0, prev_n = 0;
    for (auto it = series.rbegin(); it != series.rend(); ++it) {
        if (it->t_s > t - window_s) {
            last_sum += it->value;
            ++last_n;
        } else if (it->t_s > t - 2.0 * window_s) {
            prev_sum += it->value;
            ++prev_n;
        } else {
            break;
        }
    }
    if (last_n == 0 || prev_n == 0) return false;
    const double last_mean = last_sum / static_cast<double>(last_n);
    const double prev_mean = prev_sum / static_cast<double>(prev_n);
    return std::abs(last_mean - prev_mean) / std::max(1.0, prev_mean) < rel_epsilon;
}

std::vector<int> allocate_largest_remainder(int total, std::span<const double> weights) {
    std::vector<int> out(weights.size(), 0);
    if (weights.empty() || total <= 0) return out;
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(wsum > 0.0)) return out;

    std::vector<double> remainder(weights.size());
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * (weights[i] / wsum);
        out[i] = static_cast<int>(std::floor(exact));
        remainder[i] = exact - out[i];
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
        ++out[order[k]];
        ++assigned;
    }
    return out;
}

std::string_view to_string(RampdownPolicy p) {
    return p == RampdownPolicy::immediate_kill ? "immediate_kill" : "drain_at_job_boundary";
}

std::optional<RampdownPolicy> parse_rampdown_policy(std::string_view text) {
    if (text == "immediate_kill") return RampdownPolicy::immediate_kill;
    if (text == "drain_at_job_boundary") return RampdownPolicy::drain_at_job_boundary;
    return std::nullopt;
}

StageTracker::StageTracker(std::size_t n_stages) : fired_(n_stages, false), fired_at_(n_stages) {}

std::vector<std::size_t> StageTracker::evaluate(const Plan& plan, double t, const SeriesLookup& series) {
    std::vector<std::size_t> firing;
    bool all_prior_fired = true;
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        const Stage& stage = plan.stages[i];
        if (!fired_[i]) {
            bool fire = false;
            if (stage.at_s) {
                fire = *stage.at_s <= t;
            } else if (stage.plateau && all_prior_fired) {
                const auto points = series(stage.plateau->gpu_model);
                if (!points) {
                    throw ConfigError(fmt::format("stage '{}' watches unknown GPU model '{}'", stage.name,
                                                  stage.plateau->gpu_model));
                }
                fire = detect_plateau(*points, stage.plateau->window_s, stage.plateau->rel_epsilon);
            }
            if (fire) {
                fired_[i] = true;
                fired_at_[i] = t;
                firing.push_back(i);
            }
        }
        all_prior_fired = all_prior_fired && fired_[i];
    }
    return firing;
}

std::vector<Deprovision> rampdown(RampdownPolicy policy, std::span<const InstanceStatus> instances) {
    std::vector<Deprovision> out;
    for (const InstanceStatus& s : instances) {
        if (s.persistent) continue;
        const bool now = policy == RampdownPolicy::immediate_kill || !s.busy;
        out.push_back({s.instance, now});
    }
    return out;
}

namespace {

Provisioner::Fleet resolve_fleet(const FleetSpec& spec, const Catalog& catalog, std::optional<std::size_t> stage) {
    Provisioner::Fleet fleet;
    fleet.spec = spec;
    fleet.stage = stage;
    const auto it = catalog.find_instance_type(spec.instance_type);
    if (!it) {
        throw ConfigError(fmt::format("fleet '{}' uses unknown instance type '{}'", spec.name, spec.instance_type));
    }
    fleet.instance_type = *it;

    std::vector<double> weights;
    for (const RegionWeight& rw : spec.regions) weights.push_back(rw.weight);
    const std::vector<int> targets = allocate_largest_remainder(spec.target_size, weights);

    for (std::size_t i = 0; i < spec.regions.size(); ++i) {
        const auto region = catalog.find_region(spec.regions[i].region);
        if (!region) {
            throw ConfigError(
                fmt::format("fleet '{}' references unknown region '{}'", spec.name, spec.regions[i].region));
        }
        const auto entry = catalog.regions[*region].find(spec.instance_type);
        if (!entry) {
            throw ConfigError(fmt::format("fleet '{}': region '{}' does not offer '{}'", spec.name,
                                          spec.regions[i].region, spec.instance_type));
        }
        fleet.allocations.push_back({*region, *entry, targets[i], 0});
    }
    return fleet;
}

}  // namespace

Provisioner::Provisioner(const Plan& plan, const std::vector<FleetSpec>& baseline, const Catalog& catalog)
    : plan_(plan), tracker_(plan.stages.size()) {
    for (std::size_t s = 0; s < plan_.stages.size(); ++s) {
        for (const FleetSpec& spec : plan_.stages[s].fleets) {
            fleets_.push_back(resolve_fleet(spec, catalog, s));
        }
    }
    for (const FleetSpec& spec : baseline) {
        FleetSpec persistent = spec;
        persistent.persistent = true;
        fleets_.push_back(resolve_fleet(persistent, catalog, std::nullopt));
    }
}

std::vector<std::size_t> Provisioner::evaluate_stages(double t, const SeriesLookup& series) {
    if (ramping_down_) return {};
    const std::vector<std::size_t> firing = tracker_.evaluate(plan_, t, series);
    for (std::size_t s : firing) {
        for (Fleet& f : fleets_) {
            if (f.stage == s) f.active = true;
        }
    }
    return firing;
}

void Provisioner::start_baseline() {
    for (Fleet& f : fleets_) {
        if (!f.stage) f.active = true;
    }
}

std::vector<LaunchOrder> Provisioner::replenish(Catalog& catalog) {
    std::vector<LaunchOrder> orders;
    for (std::size_t fi = 0; fi < fleets_.size(); ++fi) {
        Fleet& f = fleets_[fi];
        if (!f.active) continue;
        for (std::size_t ai = 0; ai < f.allocations.size(); ++ai) {
            Allocation& a = f.allocations[ai];
            const int missing = a.target - a.live;
            if (missing <= 0) continue;
            const int granted = catalog.regions[a.region].grant_capacity(a.market_entry, missing);
            if (granted <= 0) continue;
            a.live += granted;
            orders.push_back({fi, ai, a.region, a.market_entry, granted});
        }
    }
    return orders;
}

void Provisioner::instance_gone(std::size_t fleet, std::size_t allocation) {
    Allocation& a = fleets_.at(fleet).allocations.at(allocation);
    if (a.live <= 0) {
        throw SimulationFault(fmt::format("fleet '{}' lost an instance it does not own", fleets_[fleet].spec.name));
    }
    --a.live;
}

void Provisioner::begin_rampdown() {
    ramping_down_ = true;
    for (Fleet& f : fleets_) {
        if (!f.spec.persistent) f.active = false;
    }
}

}  // namespace cloudburst
