#include "cloudburst/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        int line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string what = e.what();
        if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
        throw ParseError(fmt::format("line {}, column {}: {}", line, column, what), line, column);
    }
}

namespace {

// Walks a scenario document, building the Scenario and collecting every
// problem on the way rather than stopping at the first one.
class Builder {
public:
    std::vector<std::string> diags;

    void fail(const std::string& where, const std::string& msg) { diags.push_back(where + ": " + msg); }

    const json* member(const json& o, const char* key, const std::string& where, bool required) {
        if (!o.is_object()) {
            fail(where, "expected an object");
            return nullptr;
        }
        const auto it = o.find(key);
        if (it == o.end()) {
            if (required) fail(where, fmt::format("missing '{}'", key));
            return nullptr;
        }
        return &*it;
    }

    double number(const json& o, const char* key, const std::string& where, std::optional<double> fallback = {}) {
        const json* v = member(o, key, where, !fallback);
        if (!v) return fallback.value_or(0.0);
        if (!v->is_number()) {
            fail(where, fmt::format("'{}' must be a number", key));
            return fallback.value_or(0.0);
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) fail(where, fmt::format("'{}' must be finite", key));
        return x;
    }

    long long integer(const json& o, const char* key, const std::string& where,
                      std::optional<long long> fallback = {}) {
        const json* v = member(o, key, where, !fallback);
        if (!v) return fallback.value_or(0);
        if (v->is_number_integer()) return v->get<long long>();
        if (v->is_number_float()) {
            const double x = v->get<double>();
            if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
        }
        fail(where, fmt::format("'{}' must be an integer", key));
        return fallback.value_or(0);
    }

    std::string text(const json& o, const char* key, const std::string& where,
                     std::optional<std::string> fallback = {}) {
        const json* v = member(o, key, where, !fallback);
        if (!v) return fallback.value_or("");
        if (!v->is_string()) {
            fail(where, fmt::format("'{}' must be a string", key));
            return fallback.value_or("");
        }
        return v->get<std::string>();
    }

    const json& array(const json& o, const char* key, const std::string& where, bool required = true) {
        static const json empty = json::array();
        const json* v = member(o, key, where, required);
        if (!v) return empty;
        if (!v->is_array()) {
            fail(where, fmt::format("'{}' must be an array", key));
            return empty;
        }
        return *v;
    }

    Scenario build(const json& doc);

private:
    void read_catalog(const json& doc, Catalog& catalog);
    HazardSchedule read_hazard(const json& m, const std::string& where);
    FleetSpec read_fleet(const json& f, const std::string& where, const Catalog& catalog);
    void read_plan(const json& doc, Scenario& sc);
    void read_workload(const json& doc, Scenario& sc);
    void read_fetch(const json& doc, Scenario& sc);
};

void Builder::read_catalog(const json& doc, Catalog& catalog) {
    std::set<std::string> names;
    const json& models = array(doc, "gpu_models", "scenario");
    for (std::size_t i = 0; i < models.size(); ++i) {
        const std::string where = fmt::format("gpu_models[{}]", i);
        GpuModel m;
        m.name = text(models[i], "name", where);
        m.peak_tflops32 = number(models[i], "peak_tflops32", where);
        m.cores = static_cast<int>(integer(models[i], "cores", where));
        if (!(m.peak_tflops32 > 0.0)) fail(where, "peak_tflops32 must be > 0");
        if (m.cores <= 0) fail(where, "cores must be > 0");
        if (!names.insert(m.name).second) fail(where, fmt::format("duplicate GPU model '{}'", m.name));
        catalog.gpu_models.push_back(m);
    }

    names.clear();
    const json& types = array(doc, "instance_types", "scenario");
    for (std::size_t i = 0; i < types.size(); ++i) {
        const std::string where = fmt::format("instance_types[{}]", i);
        InstanceType it;
        it.name = text(types[i], "name", where);
        const std::string provider = text(types[i], "provider", where);
        if (const auto p = parse_provider(provider)) {
            it.provider = *p;
        } else {
            fail(where, fmt::format("unknown provider '{}'", provider));
        }
        it.gpu_model = text(types[i], "gpu_model", where);
        if (!catalog.find_gpu_model(it.gpu_model)) fail(where, fmt::format("unknown GPU model '{}'", it.gpu_model));
        it.gpus_per_instance = static_cast<int>(integer(types[i], "gpus_per_instance", where, 1));
        it.ondemand_price = number(types[i], "ondemand_price", where);
        it.spot_fraction = number(types[i], "spot_fraction", where, 1.0 / 3.0);
        if (it.gpus_per_instance < 1) fail(where, "gpus_per_instance must be >= 1");
        if (it.ondemand_price < 0.0) fail(where, "ondemand_price must be >= 0");
        if (!(it.spot_fraction > 0.0 && it.spot_fraction <= 1.0)) {
            fail(where, fmt::format("spot_fraction {} out of range (0, 1]", it.spot_fraction));
        }
        if (it.provider == Provider::onprem && it.ondemand_price != 0.0) fail(where, "on-prem types must have price 0");
        if (!names.insert(it.name).second) fail(where, fmt::format("duplicate instance type '{}'", it.name));
        catalog.instance_types.push_back(it);
    }

    names.clear();
    const json& regions = array(doc, "regions", "scenario");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const json& r = regions[i];
        const std::string where = fmt::format("regions[{}]", i);
        RegionMarket rm;
        rm.region_id = text(r, "id", where);
        const std::string provider = text(r, "provider", where);
        if (const auto p = parse_provider(provider)) {
            rm.provider = *p;
        } else {
            fail(where, fmt::format("unknown provider '{}'", provider));
        }
        const std::string geo = text(r, "geo_group", where);
        if (const auto g = parse_geo_group(geo)) {
            rm.geo_group = *g;
        } else {
            fail(where, fmt::format("unknown geo_group '{}'", geo));
        }
        if (const json* d = member(r, "provision_delay", where, false)) {
            rm.provision_delay.median_s = number(*d, "median_s", where + ".provision_delay", 120.0);
            rm.provision_delay.sigma_log = number(*d, "sigma_log", where + ".provision_delay", 0.5);
        }
        if (rm.provision_delay.median_s < 0.0 || rm.provision_delay.sigma_log < 0.0) {
            fail(where, "provision_delay parameters must be >= 0");
        }
        const json& markets = array(r, "markets", where);
        for (std::size_t j = 0; j < markets.size(); ++j) {
            const std::string mw = fmt::format("{}.markets[{}]", where, j);
            MarketEntry e;
            e.instance_type = text(markets[j], "instance_type", mw);
            if (const auto t = catalog.find_instance_type(e.instance_type)) {
                if (catalog.instance_types[*t].provider != rm.provider) {
                    fail(mw, fmt::format("instance type '{}' belongs to another provider", e.instance_type));
                }
            } else {
                fail(mw, fmt::format("unknown instance type '{}'", e.instance_type));
            }
            if (rm.find(e.instance_type)) fail(mw, fmt::format("instance type '{}' listed twice", e.instance_type));
            const long long cap = integer(markets[j], "capacity_cap", mw);
            if (cap < 0) fail(mw, "capacity_cap must be >= 0");
            e.capacity_cap = static_cast<int>(std::max(0LL, cap));
            e.preemption = read_hazard(markets[j], mw);
            rm.entries.push_back(e);
        }
        if (!names.insert(rm.region_id).second) fail(where, fmt::format("duplicate region '{}'", rm.region_id));
        catalog.regions.push_back(rm);
    }
}

HazardSchedule Builder::read_hazard(const json& m, const std::string& where) {
    const json* schedule = member(m, "preemption_schedule", where, false);
    if (!schedule) {
        const double rate = number(m, "preemption_rate_per_h", where, 0.0);
        if (rate < 0.0) {
            fail(where, fmt::format("negative preemption rate {}", rate));
            return {};
        }
        return HazardSchedule(rate);
    }
    if (!schedule->is_array() || schedule->empty()) {
        fail(where, "preemption_schedule must be a non-empty array");
        return {};
    }
    std::vector<HazardSchedule::Step> steps;
    for (std::size_t k = 0; k < schedule->size(); ++k) {
        const std::string sw = fmt::format("{}.preemption_schedule[{}]", where, k);
        const double from = number((*schedule)[k], "from_s", sw);
        const double rate = number((*schedule)[k], "rate_per_h", sw);
        if (rate < 0.0) fail(sw, fmt::format("negative preemption rate {}", rate));
        if (k == 0 && from != 0.0) fail(sw, "the first step must start at 0");
        if (k > 0 && !(from > steps.back().from_s)) fail(sw, "steps must be in increasing time order");
        steps.push_back({from, std::max(0.0, rate)});
    }
    try {
        return HazardSchedule(steps);
    } catch (const ConfigError& e) {
        fail(where, e.what());
        return {};
    }
}

FleetSpec Builder::read_fleet(const json& f, const std::string& where, const Catalog& catalog) {
    FleetSpec spec;
    spec.name = text(f, "name", where, std::string{});
    spec.instance_type = text(f, "instance_type", where);
    const long long target = integer(f, "target_size", where);
    if (target < 0) fail(where, "target_size must be >= 0");
    spec.target_size = static_cast<int>(std::max(0LL, target));
    if (!catalog.find_instance_type(spec.instance_type)) {
        fail(where, fmt::format("unknown instance type '{}'", spec.instance_type));
    }
    const json& regions = array(f, "regions", where);
    if (regions.empty()) fail(where, "fleet has no regions");
    double sum = 0.0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const std::string rw = fmt::format("{}.regions[{}]", where, i);
        RegionWeight w;
        w.region = text(regions[i], "region", rw);
        w.weight = number(regions[i], "weight", rw);
        if (w.weight < 0.0) fail(rw, "weight must be >= 0");
        sum += w.weight;
        if (const auto r = catalog.find_region(w.region)) {
            if (!catalog.regions[*r].find(spec.instance_type)) {
                fail(rw, fmt::format("region '{}' does not offer '{}'", w.region, spec.instance_type));
            }
        } else {
            fail(rw, fmt::format("unknown region '{}'", w.region));
        }
        spec.regions.push_back(w);
    }
    if (!regions.empty() && std::abs(sum - 1.0) > 1e-6) {
        fail(where, fmt::format("region weights sum to {:.6f}, not 1", sum));
    }
    return spec;
}

void Builder::read_plan(const json& doc, Scenario& sc) {
    const json* plan = member(doc, "plan", "scenario", true);
    if (!plan) return;
    const json& stages = array(*plan, "stages", "plan");
    double last_at = 0.0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string where = fmt::format("plan.stages[{}]", i);
        Stage st;
        st.name = text(stages[i], "name", where, fmt::format("stage-{}", i));
        const bool has_at = stages[i].is_object() && stages[i].contains("at_s");
        const bool has_plateau = stages[i].is_object() && stages[i].contains("plateau");
        if (has_at == has_plateau) fail(where, "needs exactly one of 'at_s' and 'plateau'");
        if (has_at) {
            st.at_s = number(stages[i], "at_s", where);
            if (*st.at_s < 0.0) fail(where, "at_s must be >= 0");
            last_at = std::max(last_at, *st.at_s);
        }
        if (has_plateau) {
            const json& p = stages[i]["plateau"];
            const std::string pw = where + ".plateau";
            PlateauTrigger trig;
            trig.gpu_model = text(p, "gpu_model", pw);
            trig.window_s = number(p, "window_s", pw, 1800.0);
            trig.rel_epsilon = number(p, "rel_epsilon", pw, 0.02);
            if (!sc.catalog.find_gpu_model(trig.gpu_model)) {
                fail(pw, fmt::format("unknown GPU model '{}'", trig.gpu_model));
            }
            if (!(trig.window_s > 0.0)) fail(pw, "window_s must be > 0");
            if (!(trig.rel_epsilon > 0.0)) fail(pw, "rel_epsilon must be > 0");
            st.plateau = trig;
        }
        const json& fleets = array(stages[i], "fleets", where);
        for (std::size_t j = 0; j < fleets.size(); ++j) {
            FleetSpec f = read_fleet(fleets[j], fmt::format("{}.fleets[{}]", where, j), sc.catalog);
            if (f.name.empty()) f.name = fmt::format("{}/{}", st.name, j);
            st.fleets.push_back(std::move(f));
        }
        sc.plan.stages.push_back(std::move(st));
    }
    sc.plan.rampdown_at_s = number(*plan, "rampdown_at_s", "plan");
    const std::string policy = text(*plan, "rampdown_policy", "plan", std::string("immediate_kill"));
    if (const auto p = parse_rampdown_policy(policy)) {
        sc.plan.rampdown_policy = *p;
    } else {
        fail("plan", fmt::format("unknown rampdown_policy '{}'", policy));
    }
    sc.plan.retry_interval_s = number(*plan, "retry_interval_s", "plan", 300.0);
    if (!(sc.plan.retry_interval_s > 0.0)) fail("plan", "retry_interval_s must be > 0");
    if (!stages.empty() && !(sc.plan.rampdown_at_s > last_at)) {
        fail("plan", fmt::format("rampdown_at_s {} must be later than every stage time", sc.plan.rampdown_at_s));
    }
}

void Builder::read_workload(const json& doc, Scenario& sc) {
    const json* w = member(doc, "workload", "scenario", true);
    if (!w) return;
    WorkloadSpec& ws = sc.workload;
    const long long n = integer(*w, "n_jobs", "workload");
    if (n < 0) fail("workload", "n_jobs must be >= 0");
    ws.n_jobs = static_cast<std::uint64_t>(std::max(0LL, n));
    ws.epilogue_s = number(*w, "epilogue_s", "workload", 5.0);
    if (ws.epilogue_s < 0.0) fail("workload", "epilogue_s must be >= 0");

    const std::string mode = text(*w, "mode", "workload", std::string("empirical"));
    if (mode == "empirical") {
        ws.runtime.mode = WorkloadMode::empirical;
    } else if (mode == "photon") {
        ws.runtime.mode = WorkloadMode::photon;
    } else {
        fail("workload", fmt::format("unknown mode '{}'", mode));
    }

    if (const json* rt = member(*w, "runtime", "workload", true)) {
        static const json none = json::object();
        if (!rt->is_object()) fail("workload.runtime", "expected an object keyed by GPU model");
        for (const auto& [model, spec] : (rt->is_object() ? *rt : none).items()) {
            const std::string where = "workload.runtime." + model;
            if (!sc.catalog.find_gpu_model(model)) fail(where, fmt::format("unknown GPU model '{}'", model));
            RuntimeClass rc;
            rc.median_s = number(spec, "median_s", where);
            rc.sigma_log = number(spec, "sigma_log", where, 0.15);
            rc.cap_s = number(spec, "cap_s", where, 4.0 * rc.median_s);
            if (!(rc.median_s > 0.0)) fail(where, "median_s must be > 0");
            if (rc.sigma_log < 0.0) fail(where, "sigma_log must be >= 0");
            if (rc.cap_s < rc.median_s) fail(where, "cap_s must be >= median_s");
            ws.runtime.classes[model] = rc;
        }
    }
    for (const InstanceType& it : sc.catalog.instance_types) {
        if (!ws.runtime.has(it.gpu_model)) {
            fail("workload.runtime", fmt::format("no runtime class for GPU model '{}'", it.gpu_model));
        }
    }

    if (ws.runtime.mode == WorkloadMode::photon) {
        ws.runtime.photons_per_job = number(*w, "photons_per_job", "workload");
        if (!(ws.runtime.photons_per_job > 0.0)) fail("workload", "photons_per_job must be > 0");
        const json* ratings = member(*w, "photons_per_s", "workload", true);
        if (ratings && ratings->is_object()) {
            for (const auto& [model, v] : ratings->items()) {
                if (!v.is_number() || !(v.get<double>() > 0.0)) {
                    fail("workload.photons_per_s", fmt::format("rating for '{}' must be a positive number", model));
                    continue;
                }
                ws.runtime.photons_per_s[model] = v.get<double>();
            }
        }
        for (const auto& [model, rc] : ws.runtime.classes) {
            if (!ws.runtime.photons_per_s.contains(model)) {
                fail("workload.photons_per_s", fmt::format("no rating for GPU model '{}'", model));
            }
        }
    }
}

void Builder::read_fetch(const json& doc, Scenario& sc) {
    const json* f = member(doc, "fetch", "scenario", false);
    if (!f) return;
    FetchModel& fm = sc.fetch;
    fm.file_mb = number(*f, "file_mb", "fetch", fm.file_mb);
    fm.server_gbps_cap = number(*f, "server_gbps_cap", "fetch", fm.server_gbps_cap);
    fm.per_client_mbps_cap = number(*f, "per_client_mbps_cap", "fetch", fm.per_client_mbps_cap);
    fm.overhead_s = number(*f, "overhead_s", "fetch", fm.overhead_s);
    if (!(fm.file_mb > 0.0)) fail("fetch", "file_mb must be > 0");
    if (!(fm.server_gbps_cap > 0.0)) fail("fetch", "server_gbps_cap must be > 0");
    if (!(fm.per_client_mbps_cap > 0.0)) fail("fetch", "per_client_mbps_cap must be > 0");
    if (fm.overhead_s < 0.0) fail("fetch", "overhead_s must be >= 0");
}

Scenario Builder::build(const json& doc) {
    Scenario sc;
    if (!doc.is_object()) {
        fail("scenario", "top level must be an object");
        return sc;
    }
    sc.name = text(doc, "name", "scenario", std::string("unnamed"));
    const long long seed = integer(doc, "seed", "scenario", 1);
    sc.seed = static_cast<std::uint64_t>(seed);
    sc.horizon_s = number(doc, "horizon_s", "scenario");
    sc.metric_period_s = number(doc, "metric_period_s", "scenario", 60.0);
    if (sc.horizon_s < 0.0) fail("scenario", "horizon_s must be >= 0");
    if (!(sc.metric_period_s > 0.0)) fail("scenario", "metric_period_s must be > 0");

    read_catalog(doc, sc.catalog);
    read_plan(doc, sc);
    const json& baseline = array(doc, "onprem_baseline", "scenario", false);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        FleetSpec f = read_fleet(baseline[i], fmt::format("onprem_baseline[{}]", i), sc.catalog);
        if (f.name.empty()) f.name = fmt::format("baseline/{}", i);
        f.persistent = true;
        sc.onprem_baseline.push_back(std::move(f));
    }
    read_workload(doc, sc);
    read_fetch(doc, sc);

    if (sc.horizon_s > 0.0) {
        for (const Stage& st : sc.plan.stages) {
            if (st.at_s && !(*st.at_s < sc.horizon_s)) {
                fail("plan", fmt::format("stage '{}' at {} s is not before the horizon", st.name, *st.at_s));
            }
        }
    }
    return sc;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = std::min(path.find('/', start), path.size());
        if (end > start) parts.emplace_back(path.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

template <class Json, class Visit>
void walk_path(Json& node, const std::vector<std::string>& parts, std::size_t i, Visit&& visit) {
    if (i == parts.size()) {
        if (node.is_number()) visit(node);
        return;
    }
    const std::string& key = parts[i];
    if (node.is_array()) {
        if (key == "*") {
            for (auto& child : node) walk_path(child, parts, i + 1, visit);
            return;
        }
        const bool digits = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
        if (digits) {
            const std::size_t idx = std::stoul(key);
            if (idx < node.size()) walk_path(node[idx], parts, i + 1, visit);
        }
        return;
    }
    if (node.is_object()) {
        if (key == "*") {
            for (auto& [k, child] : node.items()) walk_path(child, parts, i + 1, visit);
            return;
        }
        const auto it = node.find(key);
        if (it != node.end()) walk_path(*it, parts, i + 1, visit);
    }
}

}  // namespace

std::vector<std::string> validate_scenario(const json& doc) {
    Builder b;
    b.build(doc);
    return b.diags;
}

Scenario build_scenario(const json& doc) {
    Builder b;
    Scenario sc = b.build(doc);
    if (!b.diags.empty()) {
        std::string msg = fmt::format("scenario has {} problem(s):", b.diags.size());
        for (const std::string& d : b.diags) msg += "\n  " + d;
        throw ConfigError(msg);
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return build_scenario(parse_json_text(read_text_file(path)));
}

void apply_scale(Scenario& scenario, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError(fmt::format("scale must be positive, got {}", k));
    auto scaled = [k](long long n) { return static_cast<int>(std::llround(static_cast<double>(n) * k)); };
    for (Stage& st : scenario.plan.stages) {
        for (FleetSpec& f : st.fleets) f.target_size = scaled(f.target_size);
    }
    for (FleetSpec& f : scenario.onprem_baseline) f.target_size = scaled(f.target_size);
    for (RegionMarket& rm : scenario.catalog.regions) {
        for (MarketEntry& e : rm.entries) e.capacity_cap = scaled(e.capacity_cap);
    }
    scenario.workload.n_jobs =
        static_cast<std::uint64_t>(std::llround(static_cast<double>(scenario.workload.n_jobs) * k));
}

std::size_t set_numeric_path(json& doc, std::string_view path, double value) {
    std::size_t n = 0;
    walk_path(doc, split_path(path), 0, [&](json& leaf) {
        leaf = value;
        ++n;
    });
    return n;
}

std::size_t count_numeric_path(const json& doc, std::string_view path) {
    std::size_t n = 0;
    walk_path(doc, split_path(path), 0, [&](const json&) { ++n; });
    return n;
}

namespace {

photon::Vec3 vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
        throw ConfigError(where + ": expected [x, y, z]");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

double get_or(const json& o, const char* key, double fallback) {
    const auto it = o.find(key);
    if (it == o.end()) return fallback;
    if (!it->is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
    return it->get<double>();
}

}  // namespace

PhotonConfig build_photon_config(const json& doc) {
    if (!doc.is_object() || !doc.contains("ice")) throw ConfigError("photon config needs an 'ice' object");
    PhotonConfig cfg;

    const json& ice = doc["ice"];
    std::vector<photon::IceLayer> layers;
    if (!ice.contains("layers") || !ice["layers"].is_array()) throw ConfigError("ice.layers must be an array");
    for (const json& l : ice["layers"]) {
        if (!l.is_object()) throw ConfigError("ice.layers entries must be objects");
        layers.push_back({get_or(l, "z_top", NAN), get_or(l, "z_bottom", NAN), get_or(l, "abs_coeff", NAN),
                          get_or(l, "scat_coeff", NAN)});
    }
    photon::Tilt tilt;
    if (ice.contains("tilt")) {
        tilt.azimuth = get_or(ice["tilt"], "azimuth_rad", 0.0);
        tilt.gradient = get_or(ice["tilt"], "gradient", 0.0);
    }
    photon::Anisotropy an;
    if (ice.contains("anisotropy")) {
        an.axis_azimuth = get_or(ice["anisotropy"], "axis_azimuth_rad", 0.0);
        an.strength = get_or(ice["anisotropy"], "strength", 0.0);
    }
    cfg.ice = photon::IceModel(layers, tilt, an, get_or(ice, "g", 0.9));

    if (doc.contains("geometry")) {
        const json& g = doc["geometry"];
        if (g.contains("grid")) {
            const json& grid = g["grid"];
            cfg.doms = photon::grid_geometry(static_cast<int>(get_or(grid, "nx", 5)),
                                             static_cast<int>(get_or(grid, "ny", 5)),
                                             get_or(grid, "string_spacing_m", 125.0),
                                             static_cast<int>(get_or(grid, "doms_per_string", 10)),
                                             get_or(grid, "dom_spacing_m", 17.0), get_or(grid, "top_z", 0.0),
                                             get_or(grid, "radius_m", 0.18));
        }
        if (g.contains("doms")) {
            for (const json& d : g["doms"]) {
                cfg.doms.push_back({vec3(d.at("center"), "geometry.doms"), get_or(d, "radius_m", 0.18)});
            }
        }
    }
    for (const photon::Dom& d : cfg.doms) {
        if (!(d.radius > 0.0)) throw ConfigError("DOM radius must be > 0");
    }

    if (doc.contains("source")) {
        const json& s = doc["source"];
        if (s.contains("point")) {
            cfg.source = photon::Source::point(vec3(s["point"], "source.point"));
        } else if (s.contains("segment")) {
            const json& seg = s["segment"];
            if (!seg.is_array() || seg.size() != 2) throw ConfigError("source.segment must be [[x,y,z],[x,y,z]]");
            cfg.source = photon::Source::line(vec3(seg[0], "source.segment"), vec3(seg[1], "source.segment"));
        } else {
            throw ConfigError("source needs 'point' or 'segment'");
        }
    }
    if (!cfg.ice.layer_at(cfg.source.a) || !cfg.ice.layer_at(cfg.source.b)) {
        throw ConfigError("source lies outside the ice layers");
    }

    cfg.photons = static_cast<std::uint64_t>(get_or(doc, "photons", 100000));
    cfg.seed = static_cast<std::uint64_t>(get_or(doc, "seed", 1));
    cfg.max_steps = static_cast<std::size_t>(get_or(doc, "max_steps", static_cast<double>(photon::kDefaultMaxSteps)));
    if (cfg.max_steps == 0) throw ConfigError("max_steps must be >= 1");
    return cfg;
}

PhotonConfig load_photon_config(const std::filesystem::path& path) {
    return build_photon_config(parse_json_text(read_text_file(path)));
}

}  // namespace cloudburst
