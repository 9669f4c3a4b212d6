#include <doctest.h>

#include <cmath>
#include <vector>

#include "cloudburst/accounting.hpp"
#include "cloudburst/errors.hpp"

using namespace cloudburst;

TEST_CASE("per-second billing") {
    BillingLedger ledger;
    ledger.open(1, 0, 0, 1, 1.0, 0.0);
    CHECK(ledger.close(1, 7200.0).cost == doctest::Approx(2.0));

    ledger.open(2, 0, 0, 1, 1.0, 100.0);
    CHECK(ledger.close(2, 1900.0).cost == doctest::Approx(0.5));

    ledger.open(3, 1, 0, 4, 0.0, 0.0);
    const BillingRecord& site = ledger.close(3, 1e6);
    CHECK(site.cost == 0.0);
    CHECK(site.gpu_seconds() == doctest::Approx(4e6));

    CHECK_THROWS_AS(ledger.close(3, 2e6), SimulationFault);
    CHECK_THROWS_AS(ledger.close(42, 1.0), SimulationFault);
    CHECK(ledger.open_count() == 0);
}

TEST_CASE("accrued cost counts open records up to now") {
    BillingLedger ledger;
    ledger.open(1, 0, 0, 1, 3.6, 0.0);
    ledger.open(2, 1, 0, 1, 7.2, 0.0);
    ledger.close(2, 100.0);
    const auto c = ledger.accrued_by_group(1000.0, 2);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(0.2));
    CHECK_THROWS_AS(ledger.open(1, 0, 0, 1, 1.0, 5.0), SimulationFault);
}

TEST_CASE("integrated compute") {
    const std::vector<GpuModel> models{{"T4", 8.1, 2560}};
    MetricsSeries series(60.0, {{0, Provider::aws, GeoGroup::us_east}}, models);
    CHECK(integrated_pflops(series) == 0.0);
    for (double t = 0.0; t <= 3600.0; t += 60.0) {
        MetricsSample s;
        s.t_s = t;
        s.instances = {5500};
        s.gpus = {5500};
        s.cost_usd = {0.0};
        series.append(s);
    }
    CHECK(integrated_pflops(series) == doctest::Approx(44.55).epsilon(1e-9));
    CHECK(integrated_pflops(series, 0) == doctest::Approx(44.55).epsilon(1e-9));
    CHECK(series.model_gpu_series(0).back().value == 5500.0);

    MetricsSample back;
    back.t_s = 3600.0;
    back.instances = {0};
    back.gpus = {0};
    back.cost_usd = {0.0};
    CHECK_THROWS_AS(series.append(back), SimulationFault);
}

TEST_CASE("trapezoid over a linear ramp is exact") {
    const std::vector<SeriesPoint> ramp{{0.0, 0.0}, {1800.0, 5.0}, {3600.0, 10.0}};
    CHECK(integrate_pflops_hours(ramp) == doctest::Approx(5.0));
    CHECK(integrate_pflops_hours(std::span<const SeriesPoint>{}) == 0.0);
}

TEST_CASE("plateau level and duration") {
    std::vector<SeriesPoint> s;
    for (int i = 0; i <= 600; ++i) {
        const double t = 60.0 * i;
        double v = 0.0;
        if (i < 60) v = 17.0 * i / 60.0;
        else if (i < 360) v = 17.0 + ((i % 2) ? 0.3 : -0.3);
        else v = 0.0;
        s.push_back({t, v});
    }
    const PlateauStats p = plateau_stats(s, 60.0);
    CHECK(p.level_pflops == doctest::Approx(17.0).epsilon(0.02));
    // 300 flat samples plus the top few of the ramp within 10%.
    CHECK(p.duration_h >= 5.0);
    CHECK(p.duration_h <= 5.2);
    CHECK(plateau_stats({}, 60.0).duration_h == 0.0);
}

TEST_CASE("waste fraction") {
    CHECK(waste_fraction(0.0, 0.0, 1000.0) == 0.0);
    CHECK(waste_fraction(50.0, 50.0, 1000.0) == doctest::Approx(0.1));
    CHECK(waste_fraction(1.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("cost effectiveness") {
    ModelSummary total;
    total.pflops32_hours = 100.0;
    total.cost_usd = 1000.0;

    std::vector<ModelSummary> models(3);
    models[0].gpu_model = "T4";
    models[0].pflops32_hours = 30.0;
    models[0].cost_usd = 150.0;
    models[0].billed = true;
    models[1].gpu_model = "V100";
    models[1].pflops32_hours = 70.0;
    models[1].cost_usd = 850.0;
    models[1].billed = true;
    models[2].gpu_model = "P100";
    models[2].billed = true;

    const auto rows = cost_effectiveness(models, total);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].compute_share == doctest::Approx(0.30));
    CHECK(rows[0].cost_share == doctest::Approx(0.15));
    REQUIRE(rows[0].effectiveness.has_value());
    CHECK(*rows[0].effectiveness == doctest::Approx(2.0));
    CHECK_FALSE(rows[2].effectiveness.has_value());
    CHECK(rows[2].flagged);

    const std::vector<ModelSummary> single{total};
    const auto one = cost_effectiveness(single, total);
    CHECK(*one[0].effectiveness == 1.0);
}
