#include "cloudburst/sweep.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"
#include "cloudburst/report.hpp"
#include "cloudburst/scenario.hpp"
#include "cloudburst/simulation.hpp"

namespace cloudburst {

std::vector<SweepRow> run_sweep(const nlohmann::json& base, const SweepOptions& options) {
    if (count_numeric_path(base, options.param) == 0) {
        throw ConfigError(fmt::format("parameter path '{}' does not resolve to a number", options.param));
    }
    if (options.values.empty() || options.seeds.empty()) throw ConfigError("sweep needs at least one value and seed");

    struct Task {
        Scenario scenario;
        SweepRow row;
    };
    std::vector<Task> tasks;
    for (double v : options.values) {
        nlohmann::json doc = base;
        set_numeric_path(doc, options.param, v);
        Scenario sc = build_scenario(doc);
        apply_scale(sc, options.scale);
        for (std::uint64_t seed : options.seeds) {
            Task t{sc, {}};
            t.row.value = v;
            t.row.seed = seed;
            t.row.dir = options.out / fmt::format("value-{}_seed-{}", v, seed);
            tasks.push_back(std::move(t));
        }
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                const RunResult r = run_simulation(tasks[i].scenario, tasks[i].row.seed);
                write_run_outputs(r, tasks[i].row.dir, options.scale);
                tasks[i].row.summary = r.summary;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<SweepRow> rows;
    for (Task& t : tasks) rows.push_back(std::move(t.row));
    std::filesystem::create_directories(options.out);
    write_atomic(options.out / "sweep.csv", sweep_csv(rows));
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "value,seed,dir,completed_jobs,cost_usd,pflops32_hours,waste_fraction,plateau_pflops32,plateau_duration_h\n";
    for (const SweepRow& r : rows) {
        const ModelSummary& t = r.summary.total;
        fmt::format_to(std::back_inserter(out), "{},{},{},{},{:.2f},{},{:.6f},{},{}\n", r.value, r.seed,
                       r.dir.filename().string(), t.completed_jobs, round_cents(t.cost_usd),
                       round_sig(t.pflops32_hours, 3), t.waste_fraction, round_sig(t.plateau_pflops32, 3),
                       round_sig(t.plateau_duration_h, 3));
    }
    return out;
}

}  // namespace cloudburst
