#include "cloudburst/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

double billed_cost(double price_per_hour, double t_start, double t_end) {
    return price_per_hour * (t_end - t_start) / 3600.0;
}

void BillingLedger::open(std::size_t instance, std::size_t group, std::size_t gpu_model, int gpus, double price,
                         double t) {
    if (open_.contains(instance)) {
        throw SimulationFault(fmt::format("instance {} already has an open billing record", instance));
    }
    BillingRecord r;
    r.instance = instance;
    r.group = group;
    r.gpu_model = gpu_model;
    r.gpus = gpus;
    r.price = price;
    r.t_start = t;
    records_.push_back(r);
    open_.emplace(instance, records_.size() - 1);
}

const BillingRecord& BillingLedger::close(std::size_t instance, double t_end) {
    const auto it = open_.find(instance);
    if (it == open_.end()) {
        throw SimulationFault(fmt::format("billing record of instance {} is not open (double close?)", instance));
    }
    BillingRecord& r = records_[it->second];
    if (t_end < r.t_start) {
        throw SimulationFault(fmt::format("instance {} closed before it opened", instance));
    }
    r.t_end = t_end;
    r.cost = billed_cost(r.price, r.t_start, t_end);
    r.open = false;
    open_.erase(it);
    return r;
}

std::vector<double> BillingLedger::accrued_by_group(double t, std::size_t n_groups) const {
    std::vector<double> out(n_groups, 0.0);
    for (const BillingRecord& r : records_) {
        out.at(r.group) += r.open ? billed_cost(r.price, r.t_start, t) : r.cost;
    }
    return out;
}

std::vector<MetricGroup> enumerate_groups(const Catalog& catalog) {
    std::vector<MetricGroup> groups;
    for (const RegionMarket& region : catalog.regions) {
        for (const MarketEntry& e : region.entries) {
            const auto it = catalog.find_instance_type(e.instance_type);
            if (!it) continue;
            const auto model = catalog.find_gpu_model(catalog.instance_types[*it].gpu_model);
            if (!model) continue;
            const MetricGroup g{*model, catalog.instance_types[*it].provider, region.geo_group};
            const bool seen = std::any_of(groups.begin(), groups.end(), [&](const MetricGroup& o) {
                return o.gpu_model == g.gpu_model && o.provider == g.provider && o.geo == g.geo;
            });
            if (!seen) groups.push_back(g);
        }
    }
    std::sort(groups.begin(), groups.end(), [&](const MetricGroup& a, const MetricGroup& b) {
        return std::make_tuple(catalog.gpu_models[a.gpu_model].name, a.provider, a.geo) <
               std::make_tuple(catalog.gpu_models[b.gpu_model].name, b.provider, b.geo);
    });
    return groups;
}

MetricsSeries::MetricsSeries(double period_s, std::vector<MetricGroup> groups, std::vector<GpuModel> models)
    : period_s_(period_s), groups_(std::move(groups)), models_(std::move(models)), model_gpus_(models_.size()) {}

void MetricsSeries::append(MetricsSample sample) {
    if (!samples_.empty() && !(sample.t_s > samples_.back().t_s)) {
        throw SimulationFault(fmt::format("metrics sample at {} does not advance past {}", sample.t_s,
                                          samples_.back().t_s));
    }
    std::vector<double> per_model(models_.size(), 0.0);
    for (std::size_t g = 0; g < groups_.size(); ++g) per_model[groups_[g].gpu_model] += sample.gpus.at(g);
    for (std::size_t m = 0; m < models_.size(); ++m) model_gpus_[m].push_back({sample.t_s, per_model[m]});
    samples_.push_back(std::move(sample));
}

double MetricsSeries::group_pflops(const MetricsSample& s, std::size_t group) const {
    return s.gpus.at(group) * models_[groups_[group].gpu_model].peak_tflops32 / 1000.0;
}

double MetricsSeries::total_pflops(const MetricsSample& s) const {
    double sum = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) sum += group_pflops(s, g);
    return sum;
}

double MetricsSeries::model_pflops(const MetricsSample& s, std::size_t gpu_model) const {
    double sum = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].gpu_model == gpu_model) sum += group_pflops(s, g);
    }
    return sum;
}

double integrate_pflops_hours(std::span<const SeriesPoint> pflops) {
    double area = 0.0;
    for (std::size_t i = 1; i < pflops.size(); ++i) {
        area += 0.5 * (pflops[i].value + pflops[i - 1].value) * (pflops[i].t_s - pflops[i - 1].t_s);
    }
    return area / 3600.0;
}

namespace {

std::vector<SeriesPoint> pflops_points(const MetricsSeries& series, std::optional<std::size_t> model) {
    std::vector<SeriesPoint> pts;
    pts.reserve(series.samples().size());
    for (const MetricsSample& s : series.samples()) {
        pts.push_back({s.t_s, model ? series.model_pflops(s, *model) : series.total_pflops(s)});
    }
    return pts;
}

}  // namespace

double integrated_pflops(const MetricsSeries& series) {
    return integrate_pflops_hours(pflops_points(series, std::nullopt));
}

double integrated_pflops(const MetricsSeries& series, std::size_t gpu_model) {
    return integrate_pflops_hours(pflops_points(series, gpu_model));
}

PlateauStats plateau_stats(std::span<const SeriesPoint> pflops, double period_s) {
    PlateauStats out;
    if (pflops.empty()) return out;
    double peak = 0.0;
    for (const SeriesPoint& p : pflops) peak = std::max(peak, p.value);
    if (!(peak > 0.0)) return out;

    std::vector<double> high;
    for (const SeriesPoint& p : pflops) {
        if (p.value >= 0.9 * peak) high.push_back(p.value);
    }
    std::sort(high.begin(), high.end());
    const std::size_t n = high.size();
    out.level_pflops = (n % 2 == 1) ? high[n / 2] : 0.5 * (high[n / 2 - 1] + high[n / 2]);

    std::size_t inside = 0;
    for (const SeriesPoint& p : pflops) {
        if (std::abs(p.value - out.level_pflops) <= 0.1 * out.level_pflops) ++inside;
    }
    out.duration_h = static_cast<double>(inside) * period_s / 3600.0;
    return out;
}

double waste_fraction(double wasted_gpu_s, double idle_gpu_s, double billed_gpu_s) {
    if (!(billed_gpu_s > 0.0)) return 0.0;
    return (wasted_gpu_s + idle_gpu_s) / billed_gpu_s;
}

std::vector<EffectivenessRow> cost_effectiveness(std::span<const ModelSummary> per_model, const ModelSummary& total) {
    std::vector<EffectivenessRow> rows;
    for (const ModelSummary& m : per_model) {
        EffectivenessRow r;
        r.gpu_model = m.gpu_model;
        r.compute_share = total.pflops32_hours > 0.0 ? m.pflops32_hours / total.pflops32_hours : 0.0;
        r.cost_share = total.cost_usd > 0.0 ? m.cost_usd / total.cost_usd : 0.0;
        r.usd_per_pflops32_hour = m.usd_per_pflops32_hour;
        if (r.cost_share > 0.0) {
            r.effectiveness = r.compute_share / r.cost_share;
        } else if (m.billed) {
            r.flagged = true;
        }
        rows.push_back(r);
    }
    return rows;
}

Summary summarize(const SummaryInputs& in) {
    const Catalog& catalog = *in.catalog;
    const MetricsSeries& series = *in.series;
    const std::size_t n_models = catalog.gpu_models.size();

    Summary out;
    out.per_model.resize(n_models);
    for (std::size_t m = 0; m < n_models; ++m) out.per_model[m].gpu_model = catalog.gpu_models[m].name;
    out.total.gpu_model = "total";

    std::vector<double> billed_s(n_models, 0.0), useful_s(n_models, 0.0), wasted_s(n_models, 0.0),
        idle_s(n_models, 0.0);

    for (const BillingRecord& r : in.ledger->records()) {
        if (r.open) throw SimulationFault(fmt::format("summary requested with open record for instance {}", r.instance));
        out.per_model[r.gpu_model].cost_usd += r.cost;
        if (r.price > 0.0) out.per_model[r.gpu_model].billed = true;
        billed_s[r.gpu_model] += r.gpu_seconds();
    }
    for (const InstanceType& it : catalog.instance_types) {
        if (spot_price(it) > 0.0) {
            if (const auto m = catalog.find_gpu_model(it.gpu_model)) out.per_model[*m].billed = true;
        }
    }

    for (const Slot& slot : in.pool->slots()) {
        if (slot.state != SlotState::terminated) {
            throw SimulationFault("summary requested while slots are still alive");
        }
        // Back-to-back attempts telescope only up to rounding; anything below
        // a microsecond is not idle time.
        const double idle = (slot.terminated_s - slot.created_s) - slot.busy_s;
        if (idle > 1e-6) idle_s[slot.info.gpu_model] += idle;
    }

    for (const Job& job : in.pool->jobs()) {
        for (const Attempt& a : job.attempts) {
            const std::size_t m = in.pool->slot(a.slot).info.gpu_model;
            ++out.per_model[m].attempts;
            if (a.outcome == AttemptOutcome::success) {
                useful_s[m] += a.duration();
                ++out.per_model[m].completed_jobs;
            } else {
                wasted_s[m] += a.duration();
            }
            if (a.fetched) {
                ++out.fetch.fetches;
                if (a.fetch_s < 10.0) ++out.fetch.below_10s;
                out.fetch.max_fetch_s = std::max(out.fetch.max_fetch_s, a.fetch_s);
            }
        }
    }

    const double period = series.period_s();
    for (std::size_t m = 0; m < n_models; ++m) {
        ModelSummary& ms = out.per_model[m];
        ms.pflops32_hours = integrated_pflops(series, m);
        ms.billed_gpu_hours = billed_s[m] / 3600.0;
        ms.useful_gpu_hours = useful_s[m] / 3600.0;
        ms.wasted_gpu_hours = wasted_s[m] / 3600.0;
        ms.idle_gpu_hours = idle_s[m] / 3600.0;
        ms.waste_fraction = waste_fraction(wasted_s[m], idle_s[m], billed_s[m]);
        if (ms.pflops32_hours > 0.0) ms.usd_per_pflops32_hour = ms.cost_usd / ms.pflops32_hours;
        const PlateauStats ps = plateau_stats(pflops_points(series, m), period);
        ms.plateau_pflops32 = ps.level_pflops;
        ms.plateau_duration_h = ps.duration_h;
    }

    ModelSummary& t = out.total;
    double billed_total = 0.0, wasted_total = 0.0, idle_total = 0.0;
    for (std::size_t m = 0; m < n_models; ++m) {
        const ModelSummary& ms = out.per_model[m];
        t.cost_usd += ms.cost_usd;
        t.completed_jobs += ms.completed_jobs;
        t.attempts += ms.attempts;
        t.billed_gpu_hours += ms.billed_gpu_hours;
        t.useful_gpu_hours += ms.useful_gpu_hours;
        t.wasted_gpu_hours += ms.wasted_gpu_hours;
        t.idle_gpu_hours += ms.idle_gpu_hours;
        t.billed = t.billed || ms.billed;
        billed_total += billed_s[m];
        wasted_total += wasted_s[m];
        idle_total += idle_s[m];
    }
    t.pflops32_hours = integrated_pflops(series);
    t.waste_fraction = waste_fraction(wasted_total, idle_total, billed_total);
    if (!(billed_total > 0.0)) out.warnings.push_back("no billed GPU time; waste fraction reported as 0");
    if (t.pflops32_hours > 0.0) t.usd_per_pflops32_hour = t.cost_usd / t.pflops32_hours;
    const PlateauStats ps = plateau_stats(pflops_points(series, std::nullopt), period);
    t.plateau_pflops32 = ps.level_pflops;
    t.plateau_duration_h = ps.duration_h;

    out.effectiveness = cost_effectiveness(out.per_model, out.total);
    for (const EffectivenessRow& r : out.effectiveness) {
        if (r.flagged) out.warnings.push_back(fmt::format("billed model {} has zero cost share", r.gpu_model));
    }

    for (const MetricsSample& s : series.samples()) {
        int inst = 0, gpus = 0;
        double cores = 0.0;
        for (std::size_t g = 0; g < series.groups().size(); ++g) {
            inst += s.instances[g];
            gpus += s.gpus[g];
            cores += static_cast<double>(s.gpus[g]) * catalog.gpu_models[series.groups()[g].gpu_model].cores;
        }
        out.peak_instances = std::max(out.peak_instances, inst);
        out.peak_gpus = std::max(out.peak_gpus, gpus);
        out.peak_gpu_cores = std::max(out.peak_gpu_cores, cores);
        out.fetch.peak_sampled_gbps = std::max(out.fetch.peak_sampled_gbps, s.throughput_gbps);
    }
    out.fetch.peak_gbps = in.peak_fetch_gbps;
    return out;
}

}  // namespace cloudburst
