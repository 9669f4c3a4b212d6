#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

struct EventHandle {
    double fire_at;
    std::uint64_t seq;
};

// Discrete-event engine: a clock plus an ordered queue.
//
// Events are dequeued in lexicographic (fire_at, seq) order, where seq is a
// monotone insertion counter, so simultaneous events run in the order they
// were scheduled. Payload is any copyable type; when a free function
// `describe(const Payload&)` is visible it is used for fault diagnostics.
template <class Payload>
class EventEngine {
public:
    struct Entry {
        double fire_at;
        std::uint64_t seq;
        Payload payload;
    };

    double now() const { return now_; }
    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

    std::optional<double> next_time() const {
        if (queue_.empty()) return std::nullopt;
        return queue_.top().fire_at;
    }

    EventHandle schedule(double fire_at, Payload payload) {
        if (!std::isfinite(fire_at)) {
            throw SchedulingError(fmt::format("cannot schedule event at non-finite time {}", fire_at));
        }
        if (fire_at < now_) {
            throw SchedulingError(
                fmt::format("cannot schedule event in the past: t={} < clock={}", fire_at, now_));
        }
        const std::uint64_t seq = next_seq_++;
        queue_.push(Entry{fire_at, seq, std::move(payload)});
        return {fire_at, seq};
    }

    // Process every event with fire_at <= t_end, then set the clock to t_end.
    // The handler receives `const Entry&` and may schedule further events.
    template <class Handler>
    std::size_t run_until(double t_end, Handler&& handler) {
        if (!(t_end >= now_)) {
            throw SchedulingError(fmt::format("run_until({}) is before the clock ({})", t_end, now_));
        }
        std::size_t processed = 0;
        while (!queue_.empty() && queue_.top().fire_at <= t_end) {
            Entry entry = queue_.top();
            queue_.pop();
            now_ = entry.fire_at;
            try {
                handler(std::as_const(entry));
            } catch (const std::exception& e) {
                throw SimulationFault(context(entry) + ": " + e.what());
            }
            ++processed;
        }
        now_ = t_end;
        return processed;
    }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    static std::string context(const Entry& entry) {
        std::string what = "event";
        if constexpr (requires(const Payload& p) { describe(p); }) {
            what = describe(entry.payload);
        }
        return fmt::format("while handling {} (seq {}) at t={:.6f}s", what, entry.seq, entry.fire_at);
    }

    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace cloudburst
