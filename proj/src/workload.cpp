#include "cloudburst/workload.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

double RuntimeModel::sample(std::string_view gpu_model, RngStream& rng) const {
    const auto it = classes.find(gpu_model);
    if (it == classes.end()) {
        throw ConfigError(fmt::format("no runtime class for GPU model '{}'", gpu_model));
    }
    const RuntimeClass& rc = it->second;
    const double z = rng.normal();
    return std::min(rc.cap_s, rc.median_s * std::exp(rc.sigma_log * z));
}

double RuntimeModel::photon_runtime(std::string_view gpu_model, double photons) const {
    const auto rate = photons_per_s.find(gpu_model);
    const auto rc = classes.find(gpu_model);
    if (rate == photons_per_s.end() || rc == classes.end() || !(rate->second > 0.0)) {
        throw ConfigError(fmt::format("no photon rating for GPU model '{}'", gpu_model));
    }
    return std::min(rc->second.cap_s, photons / rate->second);
}

double per_fetch_rate_mbps(std::size_t n_active, const FetchModel& fm) {
    const double n = static_cast<double>(std::max<std::size_t>(1, n_active));
    return std::min(fm.per_client_mbps_cap, fm.server_gbps_cap * 1000.0 / n);
}

double sample_fetch_time(std::size_t n_active, const FetchModel& fm) {
    return fm.overhead_s + fm.file_mb * 8.0 / per_fetch_rate_mbps(n_active, fm);
}

double aggregate_throughput_gbps(std::size_t n_active, const FetchModel& fm) {
    if (n_active == 0) return 0.0;
    return static_cast<double>(n_active) * per_fetch_rate_mbps(n_active, fm) / 1000.0;
}

FetchServer::FetchServer(FetchModel model) : model_(model) {}

void FetchServer::advance(double t) {
    if (t < last_t_) {
        throw SimulationFault(fmt::format("fetch server moved back in time ({} < {})", t, last_t_));
    }
    if (!targets_.empty()) {
        virtual_mbit_ += per_fetch_rate_mbps(targets_.size(), model_) * (t - last_t_);
    }
    last_t_ = t;
}

void FetchServer::start(std::size_t token, double t) {
    advance(t);
    if (targets_.contains(token)) {
        throw SimulationFault(fmt::format("transfer {} started twice", token));
    }
    const double target = virtual_mbit_ + model_.file_mb * 8.0;
    const std::uint64_t order = order_++;
    queue_.emplace(target, order, token);
    targets_.emplace(token, std::make_tuple(target, order, t));
    ++generation_;
    peak_gbps_ = std::max(peak_gbps_, throughput_gbps());
}

bool FetchServer::cancel(std::size_t token, double t) {
    const auto it = targets_.find(token);
    if (it == targets_.end()) return false;
    advance(t);
    const auto& [target, order, start] = it->second;
    queue_.erase({target, order, token});
    targets_.erase(it);
    ++generation_;
    return true;
}

std::optional<double> FetchServer::next_completion() const {
    if (queue_.empty()) return std::nullopt;
    const double remaining = std::get<0>(*queue_.begin()) - virtual_mbit_;
    return last_t_ + std::max(0.0, remaining) / per_fetch_rate_mbps(targets_.size(), model_);
}

std::vector<std::pair<std::size_t, double>> FetchServer::complete_due(double t) {
    advance(t);
    std::vector<std::pair<std::size_t, double>> done;
    while (!queue_.empty()) {
        const auto [target, order, token] = *queue_.begin();
        const double remaining_s = (target - virtual_mbit_) / per_fetch_rate_mbps(targets_.size(), model_);
        if (remaining_s > 1e-9 * std::max(1.0, t)) break;
        // Snap so rounding never leaves a finished transfer behind.
        virtual_mbit_ = std::max(virtual_mbit_, target);
        const double start = std::get<2>(targets_.at(token));
        queue_.erase(queue_.begin());
        targets_.erase(token);
        done.emplace_back(token, t - start);
    }
    if (!done.empty()) ++generation_;
    return done;
}

}  // namespace cloudburst
