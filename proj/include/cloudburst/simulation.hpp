#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cloudburst/accounting.hpp"
#include "cloudburst/pool.hpp"
#include "cloudburst/provisioner.hpp"
#include "cloudburst/scenario.hpp"

namespace cloudburst {

namespace ev {
struct InstanceLaunched { std::size_t instance; };
struct InstancePreempted { std::size_t instance; };
struct InstanceDeprovisioned { std::size_t instance; };
struct JobFetchDone { std::uint64_t generation; };
struct JobCompleted { std::size_t slot; std::size_t job; std::size_t attempt; };
struct StageTrigger {};
struct MetricsSample {};
struct RampdownStart {};
struct FleetRetry {};
}  // namespace ev

using EventPayload = std::variant<ev::InstanceLaunched, ev::InstancePreempted, ev::InstanceDeprovisioned,
                                  ev::JobFetchDone, ev::JobCompleted, ev::StageTrigger, ev::MetricsSample,
                                  ev::RampdownStart, ev::FleetRetry>;

std::string describe(const EventPayload& payload);

enum class InstanceState { pending, running, gone };

struct Instance {
    std::size_t id = 0;
    std::size_t fleet = 0;
    std::size_t allocation = 0;
    std::size_t region = 0;
    std::size_t market_entry = 0;
    std::size_t instance_type = 0;
    std::size_t gpu_model = 0;
    std::size_t group = 0;
    int gpus = 1;
    InstanceState state = InstanceState::pending;
    double requested_s = 0.0;
    double launched_s = 0.0;
    double gone_s = 0.0;
    std::vector<std::size_t> slots;
};

struct StageRecord {
    std::string name;
    std::optional<double> fired_at_s;
};

struct RunResult {
    Scenario scenario;  // as run, after scaling
    std::uint64_t seed = 0;
    Catalog catalog;    // final market state
    MetricsSeries series;
    BillingLedger ledger;
    Pool pool;
    std::vector<Instance> instances;
    std::vector<StageRecord> stages;
    Summary summary;
    std::size_t events_processed = 0;
    std::vector<std::string> event_log;  // filled when requested
};

struct RunOptions {
    bool event_log = false;
};

// Runs one scenario to its horizon. Throws SimulationFault (with event
// context) if anything goes wrong during execution.
RunResult run_simulation(const Scenario& scenario, std::uint64_t seed, const RunOptions& options = {});

}  // namespace cloudburst
