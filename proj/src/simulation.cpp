#include "cloudburst/simulation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"
#include "cloudburst/event_queue.hpp"

namespace cloudburst {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

std::string describe(const EventPayload& payload) {
    return std::visit(
        Overloaded{
            [](const ev::InstanceLaunched& e) { return fmt::format("InstanceLaunched instance={}", e.instance); },
            [](const ev::InstancePreempted& e) { return fmt::format("InstancePreempted instance={}", e.instance); },
            [](const ev::InstanceDeprovisioned& e) {
                return fmt::format("InstanceDeprovisioned instance={}", e.instance);
            },
            [](const ev::JobFetchDone& e) { return fmt::format("JobFetchDone generation={}", e.generation); },
            [](const ev::JobCompleted& e) {
                return fmt::format("JobCompleted slot={} job={} attempt={}", e.slot, e.job, e.attempt);
            },
            [](const ev::StageTrigger&) { return std::string("StageTrigger"); },
            [](const ev::MetricsSample&) { return std::string("MetricsSample"); },
            [](const ev::RampdownStart&) { return std::string("RampdownStart"); },
            [](const ev::FleetRetry&) { return std::string("FleetRetry"); },
        },
        payload);
}

namespace {

class Simulation {
public:
    Simulation(const Scenario& sc, std::uint64_t seed, const RunOptions& options)
        : sc_(sc),
          seed_(seed),
          options_(options),
          catalog_(sc.catalog),
          prov_(sc.plan, sc.onprem_baseline, sc.catalog),
          fetch_(sc.fetch) {
        groups_ = enumerate_groups(catalog_);
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            group_index_[{groups_[g].gpu_model, static_cast<int>(groups_[g].provider),
                          static_cast<int>(groups_[g].geo)}] = g;
        }
        group_instances_.assign(groups_.size(), 0);
        group_gpus_.assign(groups_.size(), 0);
        series_ = MetricsSeries(sc.metric_period_s, groups_, catalog_.gpu_models);
    }

    RunResult run();

private:
    void handle(double t, const EventPayload& p);
    void launch(const std::vector<LaunchOrder>& orders, double t);
    void on_launched(std::size_t i, double t);
    void terminate(std::size_t i, double t, AttemptOutcome outcome);
    void close_instance(std::size_t i, double t);
    void drop_pending(std::size_t i, double t);
    void on_fetch_done(std::uint64_t generation, double t);
    void on_completed(const ev::JobCompleted& e, double t);
    void take_sample(double t);
    void evaluate_stages(double t);
    void start_rampdown(double t);
    void match(double t);
    void reschedule_fetch();
    double sample_runtime(std::size_t job, std::size_t gpu_model);
    void finalize(double t);

    Scenario sc_;
    std::uint64_t seed_;
    RunOptions options_;
    Catalog catalog_;
    Provisioner prov_;
    Pool pool_;
    FetchServer fetch_;
    BillingLedger ledger_;
    MetricsSeries series_;
    EventEngine<EventPayload> engine_;

    std::vector<MetricGroup> groups_;
    std::map<std::tuple<std::size_t, int, int>, std::size_t> group_index_;
    std::vector<int> group_instances_;
    std::vector<int> group_gpus_;
    std::vector<Instance> instances_;
    std::vector<std::size_t> slot_instance_;
    std::uint64_t sample_count_ = 0;
    bool finalizing_ = false;
    std::vector<std::string> log_;
};

RunResult Simulation::run() {
    std::vector<JobSpec> jobs(sc_.workload.n_jobs);
    for (std::uint64_t i = 0; i < jobs.size(); ++i) {
        jobs[i] = JobSpec{i, 0.0, sc_.workload.runtime.photons_per_job};
    }
    pool_.submit(jobs);

    const double horizon = sc_.horizon_s;
    if (horizon > 0.0) {
        engine_.schedule(0.0, ev::MetricsSample{});
        std::set<double> stage_times;
        for (const Stage& st : sc_.plan.stages) {
            if (st.at_s && *st.at_s <= horizon) stage_times.insert(*st.at_s);
        }
        for (double at : stage_times) engine_.schedule(at, ev::StageTrigger{});
        prov_.start_baseline();
        engine_.schedule(0.0, ev::FleetRetry{});
        if (!sc_.plan.stages.empty() && sc_.plan.rampdown_at_s <= horizon) {
            engine_.schedule(sc_.plan.rampdown_at_s, ev::RampdownStart{});
        }
    }

    RunResult result;
    result.events_processed = engine_.run_until(horizon, [&](const auto& entry) {
        if (options_.event_log) {
            log_.push_back(fmt::format("{:.6f} {} {}", entry.fire_at, entry.seq, describe(entry.payload)));
        }
        handle(entry.fire_at, entry.payload);
    });
    finalize(horizon);

    result.summary = summarize({&catalog_, &series_, &ledger_, &pool_, fetch_.peak_throughput_gbps()});
    for (std::size_t s = 0; s < sc_.plan.stages.size(); ++s) {
        result.stages.push_back({sc_.plan.stages[s].name, prov_.stages().fired_at(s)});
    }
    result.scenario = sc_;
    result.seed = seed_;
    result.catalog = std::move(catalog_);
    result.series = std::move(series_);
    result.ledger = std::move(ledger_);
    result.pool = std::move(pool_);
    result.instances = std::move(instances_);
    result.event_log = std::move(log_);
    return result;
}

void Simulation::handle(double t, const EventPayload& p) {
    std::visit(Overloaded{
                   [&](const ev::InstanceLaunched& e) { on_launched(e.instance, t); },
                   [&](const ev::InstancePreempted& e) {
                       if (instances_.at(e.instance).state == InstanceState::running) {
                           terminate(e.instance, t, AttemptOutcome::preempted);
                       }
                   },
                   [&](const ev::InstanceDeprovisioned& e) {
                       if (instances_.at(e.instance).state == InstanceState::running) {
                           terminate(e.instance, t, AttemptOutcome::killed_rampdown);
                       }
                   },
                   [&](const ev::JobFetchDone& e) { on_fetch_done(e.generation, t); },
                   [&](const ev::JobCompleted& e) { on_completed(e, t); },
                   [&](const ev::StageTrigger&) { evaluate_stages(t); },
                   [&](const ev::MetricsSample&) { take_sample(t); },
                   [&](const ev::RampdownStart&) { start_rampdown(t); },
                   [&](const ev::FleetRetry&) {
                       launch(prov_.replenish(catalog_), t);
                       const double next = t + sc_.plan.retry_interval_s;
                       if (next <= sc_.horizon_s) engine_.schedule(next, ev::FleetRetry{});
                   },
               },
               p);
}

void Simulation::launch(const std::vector<LaunchOrder>& orders, double t) {
    for (const LaunchOrder& o : orders) {
        const Provisioner::Fleet& fleet = prov_.fleets()[o.fleet];
        const InstanceType& it = catalog_.instance_types[fleet.instance_type];
        const RegionMarket& region = catalog_.regions[o.region];
        const std::size_t model = *catalog_.find_gpu_model(it.gpu_model);
        const std::size_t group =
            group_index_.at({model, static_cast<int>(it.provider), static_cast<int>(region.geo_group)});
        for (int k = 0; k < o.count; ++k) {
            Instance inst;
            inst.id = instances_.size();
            inst.fleet = o.fleet;
            inst.allocation = o.allocation;
            inst.region = o.region;
            inst.market_entry = o.market_entry;
            inst.instance_type = fleet.instance_type;
            inst.gpu_model = model;
            inst.group = group;
            inst.gpus = it.gpus_per_instance;
            inst.requested_s = t;
            RngStream rng(seed_, "provision/" + region.region_id);
            rng.seek(2 * inst.id);
            const double delay = region.provision_delay.sample(rng);
            instances_.push_back(inst);
            engine_.schedule(t + delay, ev::InstanceLaunched{inst.id});
        }
    }
}

void Simulation::on_launched(std::size_t i, double t) {
    Instance& inst = instances_.at(i);
    if (inst.state != InstanceState::pending) return;  // cancelled by rampdown
    inst.state = InstanceState::running;
    inst.launched_s = t;
    const InstanceType& it = catalog_.instance_types[inst.instance_type];
    const RegionMarket& region = catalog_.regions[inst.region];
    ledger_.open(i, inst.group, inst.gpu_model, inst.gpus, spot_price(it), t);
    ++group_instances_[inst.group];
    group_gpus_[inst.group] += inst.gpus;
    for (int g = 0; g < inst.gpus; ++g) {
        const std::size_t s = pool_.add_slot({i, inst.gpu_model, inst.region, it.provider}, t);
        slot_instance_.push_back(i);
        inst.slots.push_back(s);
    }

    const RngStream rng(seed_, "preempt/" + region.region_id);
    const double u = 1.0 - rng.at(i);
    const double t_pre = region.entries[inst.market_entry].preemption.sample_event_time(t, u);
    if (t_pre <= sc_.horizon_s) engine_.schedule(t_pre, ev::InstancePreempted{i});
    match(t);
}

void Simulation::terminate(std::size_t i, double t, AttemptOutcome outcome) {
    bool fetch_changed = false;
    for (std::size_t s : instances_[i].slots) {
        const Slot& slot = pool_.slot(s);
        if (slot.state == SlotState::terminated) continue;
        if (slot.state == SlotState::busy && pool_.job(*slot.job).state == JobState::fetching) {
            fetch_changed = fetch_.cancel(s, t) || fetch_changed;
        }
        pool_.on_preempt(s, t, outcome);
    }
    close_instance(i, t);
    if (fetch_changed) reschedule_fetch();
    match(t);
}

void Simulation::close_instance(std::size_t i, double t) {
    Instance& inst = instances_[i];
    ledger_.close(i, t);
    --group_instances_[inst.group];
    group_gpus_[inst.group] -= inst.gpus;
    catalog_.regions[inst.region].release(inst.market_entry, 1);
    prov_.instance_gone(inst.fleet, inst.allocation);
    inst.state = InstanceState::gone;
    inst.gone_s = t;
}

void Simulation::drop_pending(std::size_t i, double t) {
    Instance& inst = instances_[i];
    catalog_.regions[inst.region].release(inst.market_entry, 1);
    prov_.instance_gone(inst.fleet, inst.allocation);
    inst.state = InstanceState::gone;
    inst.gone_s = t;
}

double Simulation::sample_runtime(std::size_t job, std::size_t gpu_model) {
    const std::string& name = catalog_.gpu_models[gpu_model].name;
    const Job& j = pool_.job(job);
    if (sc_.workload.runtime.mode == WorkloadMode::photon) {
        return sc_.workload.runtime.photon_runtime(name, j.work);
    }
    // Indexed by (job, attempt) so the draw never depends on event order.
    const std::uint64_t attempt = std::min<std::uint64_t>(j.attempts.size() - 1, 63);
    RngStream rng(seed_, "runtime/" + name);
    rng.seek(2 * (j.id * 64 + attempt));
    return sc_.workload.runtime.sample(name, rng);
}

void Simulation::on_fetch_done(std::uint64_t generation, double t) {
    if (generation != fetch_.generation()) return;
    const auto done = fetch_.complete_due(t);
    const double overhead = sc_.fetch.overhead_s;
    for (const auto& [s, transfer_s] : done) {
        const Slot& slot = pool_.slot(s);
        const std::size_t j = *slot.job;
        const double runtime = sample_runtime(j, slot.info.gpu_model);
        pool_.start_running(j, overhead + transfer_s, runtime);
        const std::size_t attempt = pool_.job(j).attempts.size() - 1;
        engine_.schedule(t + overhead + runtime + sc_.workload.epilogue_s, ev::JobCompleted{s, j, attempt});
    }
    reschedule_fetch();
}

void Simulation::on_completed(const ev::JobCompleted& e, double t) {
    const Job& job = pool_.job(e.job);
    if (job.attempts.size() != e.attempt + 1 || job.attempts.back().closed()) return;
    const Slot& slot = pool_.slot(e.slot);
    if (slot.state != SlotState::busy || slot.job != e.job) return;
    pool_.on_complete(e.slot, e.job, t);
    if (pool_.slot(e.slot).state == SlotState::terminated) {
        const std::size_t i = slot_instance_[e.slot];
        const bool all_done = std::all_of(instances_[i].slots.begin(), instances_[i].slots.end(), [&](std::size_t s) {
            return pool_.slot(s).state == SlotState::terminated;
        });
        if (all_done && instances_[i].state == InstanceState::running) close_instance(i, t);
    }
    match(t);
}

void Simulation::take_sample(double t) {
    MetricsSample s;
    s.t_s = t;
    s.instances = group_instances_;
    s.gpus = group_gpus_;
    s.cost_usd = ledger_.accrued_by_group(t, groups_.size());
    s.active_fetches = fetch_.active();
    s.queue_depth = pool_.queued();
    s.throughput_gbps = fetch_.throughput_gbps();
    series_.append(std::move(s));
    evaluate_stages(t);

    ++sample_count_;
    const double next = static_cast<double>(sample_count_) * sc_.metric_period_s;
    if (next <= sc_.horizon_s) {
        engine_.schedule(next, ev::MetricsSample{});
    } else if (t < sc_.horizon_s) {
        engine_.schedule(sc_.horizon_s, ev::MetricsSample{});
    }
}

void Simulation::evaluate_stages(double t) {
    const auto lookup = [this](std::string_view model) -> std::optional<std::span<const SeriesPoint>> {
        const auto m = catalog_.find_gpu_model(model);
        if (!m) return std::nullopt;
        return series_.model_gpu_series(*m);
    };
    const auto fired = prov_.evaluate_stages(t, lookup);
    if (!fired.empty()) launch(prov_.replenish(catalog_), t);
}

void Simulation::start_rampdown(double t) {
    prov_.begin_rampdown();
    std::vector<InstanceStatus> live;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
        const Instance& inst = instances_[i];
        const bool persistent = prov_.fleets()[inst.fleet].spec.persistent;
        if (inst.state == InstanceState::pending && !persistent) {
            drop_pending(i, t);
            continue;
        }
        if (inst.state != InstanceState::running) continue;
        const bool busy = std::any_of(inst.slots.begin(), inst.slots.end(),
                                      [&](std::size_t s) { return pool_.slot(s).state == SlotState::busy; });
        live.push_back({i, persistent, busy});
    }
    for (const Deprovision& d : rampdown(sc_.plan.rampdown_policy, live)) {
        if (sc_.plan.rampdown_policy == RampdownPolicy::immediate_kill) {
            engine_.schedule(t, ev::InstanceDeprovisioned{d.instance});
            continue;
        }
        Instance& inst = instances_[d.instance];
        for (std::size_t s : inst.slots) pool_.drain(s, t);
        const bool all_done = std::all_of(inst.slots.begin(), inst.slots.end(),
                                          [&](std::size_t s) { return pool_.slot(s).state == SlotState::terminated; });
        if (all_done) close_instance(d.instance, t);
    }
}

void Simulation::match(double t) {
    if (finalizing_) return;
    const auto assignments = pool_.match(t);
    for (const Assignment& a : assignments) fetch_.start(a.slot, t);
    if (!assignments.empty()) reschedule_fetch();
}

void Simulation::reschedule_fetch() {
    if (finalizing_) return;
    if (const auto next = fetch_.next_completion()) {
        engine_.schedule(std::max(*next, engine_.now()), ev::JobFetchDone{fetch_.generation()});
    }
}

void Simulation::finalize(double t) {
    finalizing_ = true;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
        if (instances_[i].state == InstanceState::pending) drop_pending(i, t);
        if (instances_[i].state == InstanceState::running) terminate(i, t, AttemptOutcome::truncated);
    }
}

}  // namespace

RunResult run_simulation(const Scenario& scenario, std::uint64_t seed, const RunOptions& options) {
    Simulation sim(scenario, seed, options);
    return sim.run();
}

}  // namespace cloudburst
