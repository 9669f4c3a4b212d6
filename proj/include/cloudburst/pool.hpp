#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "cloudburst/market.hpp"

namespace cloudburst {

enum class JobState { queued, fetching, running, completed };
enum class AttemptOutcome { open, success, preempted, killed_rampdown, truncated };
enum class SlotState { idle, busy, terminated };

std::string_view to_string(JobState s);
std::string_view to_string(AttemptOutcome o);

struct Attempt {
    std::size_t slot = 0;
    double start = 0.0;
    double fetch_s = 0.0;
    double runtime_s = 0.0;
    bool fetched = false;
    double end = std::numeric_limits<double>::quiet_NaN();
    AttemptOutcome outcome = AttemptOutcome::open;

    bool closed() const { return outcome != AttemptOutcome::open; }
    double duration() const { return end - start; }
};

struct JobSpec {
    std::uint64_t id = 0;
    double submit_s = 0.0;
    double work = 0.0;  // photon count in photon-driven mode, unused otherwise
};

struct Job {
    std::uint64_t id = 0;
    double submit_s = 0.0;
    double work = 0.0;
    JobState state = JobState::queued;
    std::vector<Attempt> attempts;
};

struct SlotInfo {
    std::size_t instance = 0;
    std::size_t gpu_model = 0;
    std::size_t region = 0;
    Provider provider = Provider::aws;
};

struct Slot {
    SlotInfo info;
    SlotState state = SlotState::idle;
    std::optional<std::size_t> job;
    double created_s = 0.0;
    double terminated_s = std::numeric_limits<double>::quiet_NaN();
    double busy_s = 0.0;
    bool draining = false;
};

struct Assignment {
    std::size_t slot;
    std::size_t job;
};

// The high-throughput pool: FIFO job queue, slot registry and the
// restart-from-scratch semantics of a batch system without checkpointing.
//
// Jobs and slots are addressed by their insertion index. The queue is
// ordered by (submit time, job id), so a preempted job goes back to the
// front of the line.
class Pool {
public:
    // Appends jobs in order; throws ConfigError on a duplicate id (the
    // whole batch is rejected). Returns the queue depth.
    std::size_t submit(std::span<const JobSpec> jobs);

    std::size_t add_slot(const SlotInfo& info, double t);

    // Pairs the oldest queued jobs with idle slots (lowest slot index first).
    // Each assignment opens an attempt and puts the job in `fetching`.
    std::vector<Assignment> match(double t);

    void start_running(std::size_t job, double fetch_s, double runtime_s);

    // Closes the slot's attempt (if any) with `outcome`, requeues the job and
    // terminates the slot. Returns the requeued job.
    std::optional<std::size_t> on_preempt(std::size_t slot, double t,
                                          AttemptOutcome outcome = AttemptOutcome::preempted);

    // Success. The slot becomes idle, or terminated if it is draining.
    void on_complete(std::size_t slot, std::size_t job, double t);

    // Draining slots terminate at their next job boundary; idle ones now.
    void drain(std::size_t slot, double t);

    // Terminate an idle slot.
    void terminate_idle(std::size_t slot, double t);

    const Job& job(std::size_t i) const { return jobs_.at(i); }
    const Slot& slot(std::size_t i) const { return slots_.at(i); }
    std::span<const Job> jobs() const { return jobs_; }
    std::span<const Slot> slots() const { return slots_; }

    std::size_t submitted() const { return jobs_.size(); }
    std::size_t queued() const { return queue_.size(); }
    std::size_t fetching() const { return n_fetching_; }
    std::size_t running() const { return n_running_; }
    std::size_t completed() const { return n_completed_; }
    std::size_t idle_slots() const { return idle_.size(); }

private:
    using QueueKey = std::tuple<double, std::uint64_t, std::size_t>;

    void enqueue(std::size_t job);
    void close_attempt(Job& job, double t, AttemptOutcome outcome);
    void leave_state(JobState s);

    std::vector<Job> jobs_;
    std::vector<Slot> slots_;
    std::set<QueueKey> queue_;
    std::set<std::size_t> idle_;
    std::unordered_set<std::uint64_t> ids_;
    std::size_t n_fetching_ = 0;
    std::size_t n_running_ = 0;
    std::size_t n_completed_ = 0;
};

}  // namespace cloudburst
