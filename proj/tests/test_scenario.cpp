#include <doctest.h>

#include <string>

#include "cloudburst/errors.hpp"
#include "cloudburst/scenario.hpp"
#include "support.hpp"

using namespace cloudburst;
using nlohmann::json;

namespace {

bool mentions(const std::vector<std::string>& diags, const std::string& text) {
    for (const std::string& d : diags) {
        if (d.find(text) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("bundled scenario validates cleanly") {
    const json doc = parse_json_text(read_text_file(testing::bundled_scenario_path()));
    CHECK(validate_scenario(doc).empty());
    const Scenario sc = build_scenario(doc);
    CHECK(sc.name == "paper-feb-run");
    CHECK(sc.horizon_s == 28800.0);
    CHECK(sc.plan.stages.size() == 2);
    CHECK(sc.catalog.regions.size() == 45);
    CHECK(sc.workload.n_jobs >= 151000);
}

TEST_CASE("synthetic scenario validates cleanly") {
    CHECK(validate_scenario(testing::synthetic_doc({})).empty());
}

TEST_CASE("fleet referencing an undefined region") {
    json doc = testing::synthetic_doc({});
    doc["plan"]["stages"][0]["fleets"][0]["regions"][0]["region"] = "atlantis";
    const auto diags = validate_scenario(doc);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("atlantis") != std::string::npos);
    CHECK_THROWS_AS(build_scenario(doc), ConfigError);
}

TEST_CASE("spot fraction out of range") {
    json doc = testing::synthetic_doc({});
    doc["instance_types"][0]["spot_fraction"] = 1.5;
    const auto diags = validate_scenario(doc);
    REQUIRE(diags.size() == 1);
    CHECK(mentions(diags, "spot_fraction"));
}

TEST_CASE("several problems are all reported") {
    json doc = testing::synthetic_doc({});
    doc["regions"][0]["markets"][0]["preemption_rate_per_h"] = -1.0;
    doc["plan"]["stages"][0]["fleets"][0]["regions"] = json::array(
        {{{"region", "r1"}, {"weight", 0.5}}, {{"region", "r1"}, {"weight", 0.4}}});
    doc["fetch"]["file_mb"] = 0.0;
    const auto diags = validate_scenario(doc);
    CHECK(mentions(diags, "negative preemption rate"));
    CHECK(mentions(diags, "weights sum"));
    CHECK(mentions(diags, "file_mb"));
}

TEST_CASE("stage times must come before the horizon and rampdown") {
    json doc = testing::synthetic_doc({});
    doc["plan"]["stages"][0]["at_s"] = 8000.0;
    const auto diags = validate_scenario(doc);
    CHECK(mentions(diags, "horizon"));
    CHECK(mentions(diags, "rampdown_at_s"));
}

TEST_CASE("parse errors carry a position") {
    try {
        parse_json_text("{\n  \"a\": 1,\n  \"b\": }\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() >= 7);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(read_text_file("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("scaling rounds counts to the nearest integer") {
    testing::Synthetic p;
    p.instances = 15;
    p.n_jobs = 1006;
    p.baseline = 3;
    Scenario sc = testing::synthetic(p);
    apply_scale(sc, 0.1);
    CHECK(sc.plan.stages[0].fleets[0].target_size == 2);
    CHECK(sc.catalog.regions[0].entries[0].capacity_cap == 2);
    CHECK(sc.onprem_baseline[0].target_size == 0);
    CHECK(sc.workload.n_jobs == 101);
    CHECK_THROWS_AS(apply_scale(sc, 0.0), ConfigError);
}

TEST_CASE("numeric paths") {
    json doc = testing::synthetic_doc({});
    CHECK(count_numeric_path(doc, "regions/*/markets/*/preemption_rate_per_h") == 1);
    CHECK(set_numeric_path(doc, "regions/*/markets/*/capacity_cap", 7) == 2);
    CHECK(doc["regions"][0]["markets"][0]["capacity_cap"] == 7);
    CHECK(doc["regions"][1]["markets"][0]["capacity_cap"] == 7);
    CHECK(set_numeric_path(doc, "fetch/file_mb", 12.5) == 1);
    CHECK(doc["fetch"]["file_mb"] == 12.5);
    CHECK(set_numeric_path(doc, "regions/1/provision_delay/median_s", 5) == 1);
    CHECK(count_numeric_path(doc, "fetch/nothing") == 0);
    CHECK(count_numeric_path(doc, "name") == 0);
    CHECK(count_numeric_path(doc, "regions/9/markets") == 0);
}

TEST_CASE("photon config") {
    const PhotonConfig cfg = load_photon_config(testing::bundled_ice_path());
    CHECK(cfg.doms.size() == 250);
    CHECK(cfg.ice.hg_g() == 0.9);
    CHECK(cfg.ice.tilt().gradient == 0.01);
    CHECK(cfg.ice.anisotropy().strength == 0.1);
    CHECK(cfg.source.kind == photon::Source::Kind::segment);

    json bad = parse_json_text(read_text_file(testing::bundled_ice_path()));
    bad["ice"]["g"] = 1.0;
    CHECK_THROWS_AS(build_photon_config(bad), ConfigError);
    bad = parse_json_text(read_text_file(testing::bundled_ice_path()));
    bad["source"] = {{"point", {0.0, 0.0, 5000.0}}};
    CHECK_THROWS_AS(build_photon_config(bad), ConfigError);
}
