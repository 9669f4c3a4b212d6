#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cloudburst/report.hpp"
#include "cloudburst/simulation.hpp"
#include "support.hpp"

using namespace cloudburst;

namespace {

double total_attempt_seconds(const Pool& pool, bool successful) {
    double s = 0.0;
    for (const Job& j : pool.jobs()) {
        for (const Attempt& a : j.attempts) {
            if ((a.outcome == AttemptOutcome::success) == successful) s += a.duration();
        }
    }
    return s;
}

}  // namespace

TEST_CASE("identical seeds give identical runs") {
    testing::Synthetic p;
    p.instances = 40;
    p.rate_per_h = 0.3;
    p.sigma_log = 0.2;
    p.delay_median_s = 90.0;
    p.delay_sigma = 0.5;
    p.n_jobs = 400;
    p.file_mb = 45.0;
    p.overhead_s = 0.3;
    p.epilogue_s = 5.0;
    const Scenario sc = testing::synthetic(p);
    const RunResult a = run_simulation(sc, 11, {true});
    const RunResult b = run_simulation(sc, 11, {true});
    CHECK(a.event_log == b.event_log);
    CHECK(timeseries_csv(a) == timeseries_csv(b));
    CHECK(jobs_csv(a) == jobs_csv(b));
    CHECK(summary_json(a, 1.0).dump() == summary_json(b, 1.0).dump());
    CHECK(a.event_log.size() == a.events_processed);

    const RunResult c = run_simulation(sc, 12, {true});
    CHECK(jobs_csv(a) != jobs_csv(c));
}

TEST_CASE("zero horizon does nothing") {
    testing::Synthetic p;
    p.horizon_s = 0.0;
    p.rampdown_at_s = 0.0;
    nlohmann::json doc = testing::synthetic_doc(p);
    doc["plan"]["stages"][0]["at_s"] = 0.0;
    doc["plan"]["rampdown_at_s"] = 1.0;
    const Scenario sc = build_scenario(doc);
    const RunResult r = run_simulation(sc, 1);
    CHECK(r.series.empty());
    CHECK(r.summary.total.cost_usd == 0.0);
    CHECK(r.summary.total.completed_jobs == 0);
    CHECK(r.events_processed == 0);
    CHECK(timeseries_csv(r).find('\n') == timeseries_csv(r).size() - 1);
}

TEST_CASE("timeseries covers the horizon at the metric period") {
    testing::Synthetic p;
    p.horizon_s = 7230.0;
    const RunResult r = run_simulation(testing::synthetic(p), 3);
    const auto samples = r.series.samples();
    REQUIRE(samples.size() == 122);
    for (std::size_t i = 1; i < samples.size(); ++i) CHECK(samples[i].t_s > samples[i - 1].t_s);
    CHECK(samples[0].t_s == 0.0);
    CHECK(samples[120].t_s == 7200.0);
    CHECK(samples.back().t_s == 7230.0);
}

TEST_CASE("drain without preemption wastes nothing") {
    testing::Synthetic p;
    p.instances = 20;
    p.runtime_s = 3600.0;
    p.n_jobs = 1000;
    p.rampdown_at_s = 5000.0;
    p.horizon_s = 12000.0;
    p.policy = "drain_at_job_boundary";
    const RunResult r = run_simulation(testing::synthetic(p), 5);
    CHECK(r.summary.total.waste_fraction == 0.0);
    CHECK(r.summary.total.wasted_gpu_hours == 0.0);
    CHECK(r.summary.total.idle_gpu_hours == 0.0);
    // Two rounds of 20 jobs, the second drains at about 7200 s.
    CHECK(r.summary.total.completed_jobs == 40);

    double runtime_sum = 0.0, last_end = 0.0;
    for (const Job& j : r.pool.jobs()) {
        for (const Attempt& a : j.attempts) {
            runtime_sum += a.fetch_s + a.runtime_s;
            last_end = std::max(last_end, a.end);
        }
    }
    CHECK(total_attempt_seconds(r.pool, true) == doctest::Approx(runtime_sum).epsilon(1e-9));
    double last_gone = 0.0;
    for (const Instance& inst : r.instances) last_gone = std::max(last_gone, inst.gone_s);
    CHECK(last_gone == last_end);
    CHECK(r.summary.total.billed_gpu_hours * 3600.0 == doctest::Approx(runtime_sum).epsilon(1e-9));
}

TEST_CASE("immediate kill 600 s into a job wastes 600 GPU-seconds") {
    testing::Synthetic p;
    p.instances = 1;
    p.n_jobs = 5;
    p.rampdown_at_s = 600.0;
    p.horizon_s = 3600.0;
    const RunResult r = run_simulation(testing::synthetic(p), 1);
    CHECK(r.summary.total.wasted_gpu_hours * 3600.0 == doctest::Approx(600.0));
    CHECK(r.summary.total.completed_jobs == 0);
    CHECK(r.summary.total.cost_usd == doctest::Approx(1.0 * 600.0 / 3600.0));
    REQUIRE(r.pool.job(0).attempts.size() == 1);
    CHECK(r.pool.job(0).attempts[0].outcome == AttemptOutcome::killed_rampdown);
    CHECK(r.pool.job(0).state == JobState::queued);
}

TEST_CASE("drain lets running jobs finish") {
    testing::Synthetic p;
    p.instances = 3;
    p.n_jobs = 10;
    p.rampdown_at_s = 600.0;
    p.horizon_s = 7200.0;
    p.policy = "drain_at_job_boundary";
    const RunResult r = run_simulation(testing::synthetic(p), 1);
    CHECK(r.summary.total.completed_jobs == 3);
    CHECK(r.summary.total.wasted_gpu_hours == 0.0);
    for (const Instance& inst : r.instances) {
        CHECK(inst.state == InstanceState::gone);
        CHECK(inst.gone_s == doctest::Approx(3600.0).epsilon(1e-6));
    }
}

TEST_CASE("jobs are conserved and caps respected") {
    testing::Synthetic p;
    p.instances = 30;
    p.rate_per_h = 0.5;
    p.sigma_log = 0.3;
    p.delay_median_s = 60.0;
    p.delay_sigma = 0.4;
    p.n_jobs = 300;
    p.baseline = 4;
    p.horizon_s = 14400.0;
    p.rampdown_at_s = 9000.0;
    const RunResult r = run_simulation(testing::synthetic(p), 2);
    const Pool& pool = r.pool;
    CHECK(pool.queued() + pool.fetching() + pool.running() + pool.completed() == pool.submitted());
    CHECK(pool.fetching() == 0);
    CHECK(pool.running() == 0);

    std::size_t preempted = 0;
    for (const Job& j : pool.jobs()) {
        std::size_t success = 0;
        for (const Attempt& a : j.attempts) {
            CHECK(a.closed());
            if (a.outcome == AttemptOutcome::success) ++success;
            if (a.outcome == AttemptOutcome::preempted) ++preempted;
        }
        CHECK(success == (j.state == JobState::completed ? 1u : 0u));
    }
    CHECK(preempted > 0);

    for (const MetricsSample& s : r.series.samples()) {
        int cloud = 0, site = 0;
        for (std::size_t g = 0; g < r.series.groups().size(); ++g) {
            (r.series.groups()[g].provider == Provider::onprem ? site : cloud) += s.instances[g];
        }
        CHECK(cloud <= 30);
        CHECK(site <= 4);
        if (s.t_s > 9000.0) {
            CHECK(cloud == 0);
            CHECK(site == 4);
        }
    }
    CHECK(r.ledger.open_count() == 0);
}

TEST_CASE("expected attempts per job with memoryless preemption") {
    testing::Synthetic p;
    p.instances = 200;
    p.runtime_s = 3600.0;
    p.rate_per_h = 0.1;  // one expected preemption per ten jobs
    p.n_jobs = 100000;
    p.rampdown_at_s = 100.0 * 3600.0;
    p.horizon_s = 103.0 * 3600.0;
    p.policy = "drain_at_job_boundary";
    p.retry_s = 60.0;
    const RunResult r = run_simulation(testing::synthetic(p), 9);
    std::size_t attempts = 0, completed = 0;
    for (const Job& j : r.pool.jobs()) {
        if (j.state != JobState::completed) continue;
        ++completed;
        attempts += j.attempts.size();
    }
    REQUIRE(completed > 15000);
    const double mean = static_cast<double>(attempts) / completed;
    CHECK(std::abs(mean - std::exp(0.1)) < 0.01);
}

TEST_CASE("sampling period barely moves integrated compute") {
    testing::Synthetic p;
    p.instances = 50;
    p.rate_per_h = 0.2;
    p.delay_median_s = 300.0;
    p.delay_sigma = 0.6;
    p.sigma_log = 0.2;
    p.n_jobs = 2000;
    p.horizon_s = 21600.0;
    p.rampdown_at_s = 18000.0;
    p.period_s = 60.0;
    const RunResult coarse = run_simulation(testing::synthetic(p), 4);
    p.period_s = 10.0;
    const RunResult fine = run_simulation(testing::synthetic(p), 4);
    const double a = coarse.summary.total.pflops32_hours;
    const double b = fine.summary.total.pflops32_hours;
    REQUIRE(b > 0.0);
    CHECK(std::abs(a - b) / b < 0.005);
    CHECK(coarse.summary.total.cost_usd == doctest::Approx(fine.summary.total.cost_usd).epsilon(1e-12));
}

TEST_CASE("totals scale linearly with the instance multiplier") {
    testing::Synthetic p;
    p.instances = 200;
    p.rate_per_h = 0.1;
    p.delay_median_s = 120.0;
    p.delay_sigma = 0.5;
    p.sigma_log = 0.15;
    p.n_jobs = 10000;
    p.horizon_s = 28800.0;
    p.rampdown_at_s = 25000.0;
    Scenario one = testing::synthetic(p);
    Scenario two = one;
    apply_scale(one, 0.1);
    apply_scale(two, 0.2);
    const Summary a = run_simulation(one, 6).summary;
    const Summary b = run_simulation(two, 6).summary;
    CHECK(b.total.cost_usd / a.total.cost_usd == doctest::Approx(2.0).epsilon(0.05));
    CHECK(b.total.pflops32_hours / a.total.pflops32_hours == doctest::Approx(2.0).epsilon(0.05));
    CHECK(static_cast<double>(b.total.completed_jobs) / a.total.completed_jobs == doctest::Approx(2.0).epsilon(0.1));
}
