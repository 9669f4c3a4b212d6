#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudburst/market.hpp"

namespace cloudburst {

struct SeriesPoint {
    double t_s;
    double value;
};

// Two-window plateau rule: the mean over (t-W, t] is compared with the mean
// over (t-2W, t-W]. Needs at least 2W of history, otherwise false.
bool detect_plateau(std::span<const SeriesPoint> series, double window_s, double rel_epsilon);

// Split `total` by `weights` (which sum to 1) with largest-remainder
// rounding; ties go to the lower index.
std::vector<int> allocate_largest_remainder(int total, std::span<const double> weights);

struct RegionWeight {
    std::string region;
    double weight = 0.0;
};

struct FleetSpec {
    std::string name;
    std::string instance_type;
    std::vector<RegionWeight> regions;
    int target_size = 0;
    // On-prem baseline fleets survive rampdown.
    bool persistent = false;
};

struct PlateauTrigger {
    std::string gpu_model;
    double window_s = 1800.0;
    double rel_epsilon = 0.02;
};

struct Stage {
    std::string name;
    std::optional<double> at_s;
    std::optional<PlateauTrigger> plateau;
    std::vector<FleetSpec> fleets;
};

enum class RampdownPolicy { immediate_kill, drain_at_job_boundary };

std::string_view to_string(RampdownPolicy p);
std::optional<RampdownPolicy> parse_rampdown_policy(std::string_view text);

struct Plan {
    std::vector<Stage> stages;
    double rampdown_at_s = 0.0;
    RampdownPolicy rampdown_policy = RampdownPolicy::immediate_kill;
    double retry_interval_s = 300.0;
};

// Returns the per-GPU-model count series used by plateau triggers, or
// nullopt for an unknown model.
using SeriesLookup = std::function<std::optional<std::span<const SeriesPoint>>(std::string_view gpu_model)>;

// Decides when stages fire. At-stages fire once their time has come;
// a plateau stage is armed once every earlier stage has fired and fires
// on the first evaluation where its detector reports a plateau.
class StageTracker {
public:
    explicit StageTracker(std::size_t n_stages);

    std::vector<std::size_t> evaluate(const Plan& plan, double t, const SeriesLookup& series);
    bool fired(std::size_t stage) const { return fired_.at(stage); }
    std::optional<double> fired_at(std::size_t stage) const { return fired_at_.at(stage); }

private:
    std::vector<bool> fired_;
    std::vector<std::optional<double>> fired_at_;
};

struct LaunchOrder {
    std::size_t fleet;
    std::size_t allocation;  // index into the fleet's regional allocations
    std::size_t region;      // catalog region index
    std::size_t market_entry;
    int count;
};

struct InstanceStatus {
    std::size_t instance;
    bool persistent = false;
    bool busy = false;
};

struct Deprovision {
    std::size_t instance;
    // Terminate now; otherwise terminate when the current attempts end.
    bool immediate = true;
};

// Rampdown decisions for the live, non-persistent instances.
std::vector<Deprovision> rampdown(RampdownPolicy policy, std::span<const InstanceStatus> instances);

// Owns the fleets (staged plus baseline) and keeps each regional share at
// its target, within what the market grants.
class Provisioner {
public:
    struct Allocation {
        std::size_t region;
        std::size_t market_entry;
        int target = 0;
        int live = 0;  // pending launches plus running instances
    };

    struct Fleet {
        FleetSpec spec;
        std::size_t instance_type = 0;
        std::vector<Allocation> allocations;
        bool active = false;
        std::optional<std::size_t> stage;  // nullopt for baseline fleets
    };

    Provisioner(const Plan& plan, const std::vector<FleetSpec>& baseline, const Catalog& catalog);

    // Activates the fleets of every firing stage; returns fired stage indices.
    std::vector<std::size_t> evaluate_stages(double t, const SeriesLookup& series);

    // Activates the baseline fleets.
    void start_baseline();

    // Requests the missing instances of every active fleet from the market.
    std::vector<LaunchOrder> replenish(Catalog& catalog);

    // An instance of this fleet allocation was preempted, cancelled or terminated.
    void instance_gone(std::size_t fleet, std::size_t allocation);

    // Deactivates every non-persistent fleet.
    void begin_rampdown();
    bool ramping_down() const { return ramping_down_; }

    const Plan& plan() const { return plan_; }
    const std::vector<Fleet>& fleets() const { return fleets_; }
    const StageTracker& stages() const { return tracker_; }

private:
    Plan plan_;
    StageTracker tracker_;
    std::vector<Fleet> fleets_;
    bool ramping_down_ = false;
};

}  // namespace cloudburst
