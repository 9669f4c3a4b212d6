#include "cloudburst/pool.hpp"

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::fetching: return "fetching";
        case JobState::running: return "running";
        case JobState::completed: return "completed";
    }
    return "?";
}

std::string_view to_string(AttemptOutcome o) {
    switch (o) {
        case AttemptOutcome::open: return "open";
        case AttemptOutcome::success: return "success";
        case AttemptOutcome::preempted: return "preempted";
        case AttemptOutcome::killed_rampdown: return "killed_rampdown";
        case AttemptOutcome::truncated: return "truncated";
    }
    return "?";
}

std::size_t Pool::submit(std::span<const JobSpec> jobs) {
    std::unordered_set<std::uint64_t> batch;
    for (const JobSpec& spec : jobs) {
        if (ids_.contains(spec.id) || !batch.insert(spec.id).second) {
            throw ConfigError(fmt::format("duplicate job id {}", spec.id));
        }
    }
    for (const JobSpec& spec : jobs) {
        ids_.insert(spec.id);
        Job job;
        job.id = spec.id;
        job.submit_s = spec.submit_s;
        job.work = spec.work;
        jobs_.push_back(std::move(job));
        enqueue(jobs_.size() - 1);
    }
    return queue_.size();
}

std::size_t Pool::add_slot(const SlotInfo& info, double t) {
    Slot slot;
    slot.info = info;
    slot.created_s = t;
    slots_.push_back(slot);
    idle_.insert(slots_.size() - 1);
    return slots_.size() - 1;
}

void Pool::enqueue(std::size_t j) {
    Job& job = jobs_[j];
    job.state = JobState::queued;
    queue_.emplace(job.submit_s, job.id, j);
}

std::vector<Assignment> Pool::match(double t) {
    std::vector<Assignment> out;
    while (!queue_.empty() && !idle_.empty()) {
        const std::size_t j = std::get<2>(*queue_.begin());
        queue_.erase(queue_.begin());
        const std::size_t s = *idle_.begin();
        idle_.erase(idle_.begin());

        Job& job = jobs_[j];
        job.state = JobState::fetching;
        ++n_fetching_;
        Attempt a;
        a.slot = s;
        a.start = t;
        job.attempts.push_back(a);

        slots_[s].state = SlotState::busy;
        slots_[s].job = j;
        out.push_back({s, j});
    }
    return out;
}

void Pool::start_running(std::size_t j, double fetch_s, double runtime_s) {
    Job& job = jobs_.at(j);
    if (job.state != JobState::fetching) {
        throw SimulationFault(fmt::format("job {} started running while {}", job.id, to_string(job.state)));
    }
    --n_fetching_;
    ++n_running_;
    job.state = JobState::running;
    job.attempts.back().fetched = true;
    job.attempts.back().fetch_s = fetch_s;
    job.attempts.back().runtime_s = runtime_s;
}

void Pool::leave_state(JobState s) {
    if (s == JobState::fetching) --n_fetching_;
    if (s == JobState::running) --n_running_;
}

void Pool::close_attempt(Job& job, double t, AttemptOutcome outcome) {
    Attempt& a = job.attempts.back();
    a.end = t;
    a.outcome = outcome;
    slots_[a.slot].busy_s += a.duration();
}

std::optional<std::size_t> Pool::on_preempt(std::size_t s, double t, AttemptOutcome outcome) {
    Slot& slot = slots_.at(s);
    if (slot.state == SlotState::terminated) {
        throw SimulationFault(fmt::format("slot {} preempted after termination", s));
    }
    std::optional<std::size_t> requeued;
    if (slot.state == SlotState::busy) {
        const std::size_t j = *slot.job;
        Job& job = jobs_[j];
        leave_state(job.state);
        close_attempt(job, t, outcome);
        enqueue(j);
        requeued = j;
    } else {
        idle_.erase(s);
    }
    slot.state = SlotState::terminated;
    slot.job.reset();
    slot.terminated_s = t;
    return requeued;
}

void Pool::on_complete(std::size_t s, std::size_t j, double t) {
    Slot& slot = slots_.at(s);
    if (slot.state != SlotState::busy || slot.job != j) {
        throw SimulationFault(fmt::format("completion of job {} on slot {} that is not running it", j, s));
    }
    Job& job = jobs_[j];
    leave_state(job.state);
    close_attempt(job, t, AttemptOutcome::success);
    job.state = JobState::completed;
    ++n_completed_;
    slot.job.reset();
    if (slot.draining) {
        slot.state = SlotState::terminated;
        slot.terminated_s = t;
    } else {
        slot.state = SlotState::idle;
        idle_.insert(s);
    }
}

void Pool::drain(std::size_t s, double t) {
    Slot& slot = slots_.at(s);
    slot.draining = true;
    if (slot.state == SlotState::idle) terminate_idle(s, t);
}

void Pool::terminate_idle(std::size_t s, double t) {
    Slot& slot = slots_.at(s);
    if (slot.state != SlotState::idle) {
        throw SimulationFault(fmt::format("slot {} is not idle", s));
    }
    idle_.erase(s);
    slot.state = SlotState::terminated;
    slot.terminated_s = t;
}

}  // namespace cloudburst
