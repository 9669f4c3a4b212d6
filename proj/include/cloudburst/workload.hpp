#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cloudburst/rng.hpp"

namespace cloudburst {

// Lognormal runtime class for one GPU model, truncated at cap_s.
struct RuntimeClass {
    double median_s = 0.0;
    double sigma_log = 0.15;
    double cap_s = 0.0;
};

enum class WorkloadMode { empirical, photon };

// Job runtime per GPU model.
//
// In empirical mode a runtime is a lognormal draw around the model's
// observed median. In photon mode every job carries a photon count and
// the runtime is count / (photons per second of the model); the ratings
// are set so the medians agree.
class RuntimeModel {
public:
    WorkloadMode mode = WorkloadMode::empirical;
    std::map<std::string, RuntimeClass, std::less<>> classes;
    double photons_per_job = 0.0;
    std::map<std::string, double, std::less<>> photons_per_s;

    bool has(std::string_view gpu_model) const { return classes.contains(gpu_model); }

    // Empirical: lognormal around the median, clamped to cap_s. Throws
    // ConfigError for an unknown model.
    double sample(std::string_view gpu_model, RngStream& rng) const;

    // Photon-driven: work / rating, clamped to cap_s.
    double photon_runtime(std::string_view gpu_model, double photons) const;
};

struct FetchModel {
    double file_mb = 45.0;
    double server_gbps_cap = 100.0;
    double per_client_mbps_cap = 500.0;
    double overhead_s = 0.3;
};

// Fair share of the server for one of n concurrent transfers, in Mbps.
double per_fetch_rate_mbps(std::size_t n_active, const FetchModel& fm);

// Download time with n concurrent transfers held constant.
double sample_fetch_time(std::size_t n_active, const FetchModel& fm);

// Server egress in Gbps with n concurrent transfers.
double aggregate_throughput_gbps(std::size_t n_active, const FetchModel& fm);

// Processor-sharing model of the input-file server.
//
// Every active transfer gets per_fetch_rate_mbps(n) and the rate changes
// whenever a transfer starts or leaves, so the aggregate never exceeds the
// server cap. Transfers are tracked in "virtual megabits": the amount any
// single transfer has received since the server was created.
class FetchServer {
public:
    explicit FetchServer(FetchModel model);

    void start(std::size_t token, double t);
    // Removes an in-flight transfer (preempted or killed). False if unknown.
    bool cancel(std::size_t token, double t);

    // Absolute time of the next completion, if any transfer is active.
    std::optional<double> next_completion() const;

    // Transfers finished by time t, with their transfer duration (overhead
    // not included), in completion order.
    std::vector<std::pair<std::size_t, double>> complete_due(double t);

    std::size_t active() const { return targets_.size(); }
    double throughput_gbps() const { return aggregate_throughput_gbps(active(), model_); }
    double peak_throughput_gbps() const { return peak_gbps_; }
    std::uint64_t generation() const { return generation_; }
    const FetchModel& model() const { return model_; }

private:
    void advance(double t);

    FetchModel model_;
    double virtual_mbit_ = 0.0;
    double last_t_ = 0.0;
    double peak_gbps_ = 0.0;
    std::uint64_t generation_ = 0;
    std::uint64_t order_ = 0;
    // (virtual target, start order, token)
    std::set<std::tuple<double, std::uint64_t, std::size_t>> queue_;
    std::unordered_map<std::size_t, std::tuple<double, std::uint64_t, double>> targets_;  // token -> (target, order, start)
};

}  // namespace cloudburst
