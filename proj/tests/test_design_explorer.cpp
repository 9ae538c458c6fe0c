#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "cmut/design_explorer.hpp"
#include "cmut/errors.hpp"
#include "test_support.hpp"

using namespace cmut;
using cmut::test::rel_err;

namespace {

const CmutCell ref = CmutCell::reference();
constexpr double pi = std::numbers::pi;

LinearTemplate linear_template() {
    LinearTemplate t;
    t.sensor_count = 8;
    t.frequency = 1.753e6;
    t.bandwidth = 1.753e6;
    return t;
}

OgmrTemplate ogmr_template() {
    OgmrTemplate t;
    t.sensor_count = 8;
    t.frequency = 1.753e6;
    return t;
}

double f0_with(CmutCell cell, double h) {
    cell.membrane_thickness = h;
    return derive_lumped(cell).lumped_frequency;
}

}  // namespace

TEST_CASE("build_ogmr and build_linear resolve templates against the cell") {
    const LumpedParams p = derive_lumped(ref);
    const OgmrSetup o = build_ogmr(ref, ogmr_template());
    CHECK(o.circuit.capacitance == p.rest_capacitance);
    CHECK(rel_err(o.delta_c, 0.5 * p.rest_capacitance) < 1e-15);
    CHECK(rel_err(o.circuit.angular_frequency, 2.0 * pi * 1.753e6) < 1e-15);

    OgmrTemplate bare = ogmr_template();
    bare.frequency.reset();
    bare.capacitance = 1e-12;
    const OgmrSetup o2 = build_ogmr(ref, bare);
    CHECK(o2.circuit.capacitance == 1e-12);
    CHECK(rel_err(o2.circuit.angular_frequency, 2.0 * pi * p.lumped_frequency) < 1e-15);

    const LinearSetup l = build_linear(ref, linear_template());
    CHECK(l.circuit.gap == ref.gap);
    CHECK(rel_err(l.displacement, ref.gap / 3.0) < 1e-15);

    OgmrTemplate bad = ogmr_template();
    bad.displacement_fraction = 1.0;
    CHECK_THROWS_AS(build_ogmr(ref, bad), InvalidInput);
}

TEST_CASE("sweep_sensor_count on the linear circuit") {
    const LinearSetup setup = build_linear(ref, linear_template());
    const auto rows = sweep_sensor_count(setup.circuit, 8, setup.displacement, false);
    REQUIRE(rows.size() == 8);
    for (const auto& row : rows) {
        const double n = row.parameter_value;
        CHECK(rel_err(row.metric("eta"), 1.39e4 * std::sqrt(n)) < 0.02);
        CHECK(rel_err(row.metric("eta_ratio"), std::sqrt(n)) < 1e-12);
        CHECK(rel_err(row.metric("signal_v"), n * 5.0 / 3.0) < 1e-12);
    }
    const auto single = sweep_sensor_count(setup.circuit, 1, setup.displacement, true);
    REQUIRE(single.size() == 1);
    CHECK(single[0].metric("eta_ratio") == 1.0);
    CHECK_THROWS_AS(sweep_sensor_count(setup.circuit, 0, setup.displacement, true), InvalidInput);
    CHECK_THROWS_AS(rows[0].metric("nope"), ConfigError);
}

TEST_CASE("sweep_sensor_count on the serial circuit") {
    const OgmrSetup setup = build_ogmr(ref, ogmr_template());
    const auto rows = sweep_sensor_count(setup.circuit, 8, setup.delta_c);
    REQUIRE(rows.size() == 8);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        CHECK(rows[i].parameter_value == n);
        CHECK(rows[i].metric("eta_definition") > 0.0);
        CHECK(rows[i].metric("eta_closed_form") > 0.0);
        CHECK(rel_err(rows[i].metric("bandwidth_hz"), 1.753e6) < 1e-12);
        // matched rule: constant signal, noise ~ sqrt(n)
        CHECK(rel_err(rows[i].metric("eta_ratio"), 1.0 / std::sqrt(n)) < 1e-9);
        CHECK(rel_err(rows[i].metric("eta_closed_form") / rows[0].metric("eta_closed_form"), std::sqrt(n)) <
              1e-12);
    }
    const auto one = sweep_sensor_count(setup.circuit, 1, setup.delta_c);
    REQUIRE(one.size() == 1);
    CHECK(one[0].metric("eta_ratio") == 1.0);
}

TEST_CASE("closed-form sweep reproduces the 2.83x claim") {
    const auto rows = sweep_sensor_count_closed_form(8, 5.16e4, 0.0, true);
    REQUIRE(rows.size() == 8);
    const double ratio = rows.back().metric("eta_ratio");
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3g", ratio);
    CHECK(std::string(buf) == "2.83");
    CHECK(rel_err(rows.back().metric("eta_closed_form"), 1.29e4 * std::sqrt(8.0)) < 1e-12);
}

TEST_CASE("calibrate_electrode_thickness") {
    const LumpedParams p = derive_lumped(ref);
    const double target = 1.753e6;
    const double omega = 2.0 * pi * target;
    const double oracle = (p.spring_constant / (omega * omega) - p.membrane_mass - p.radiation_mass) /
                          (ref.electrode.density * p.area);

    const double t = calibrate_electrode_thickness(ref, target);
    CHECK(rel_err(t, oracle) < 1e-6);
    CHECK(rel_err(t, 2.07e-6) < 0.002);
    CmutCell solved = ref;
    solved.electrode_thickness = t;
    CHECK(rel_err(derive_lumped(solved).lumped_frequency, target) <= 1e-6);

    CmutCell bare = ref;
    bare.electrode_thickness = 0.0;
    const double bare_f0 = derive_lumped(bare).lumped_frequency;
    CHECK(calibrate_electrode_thickness(ref, bare_f0) == 0.0);
    CHECK_THROWS_AS(calibrate_electrode_thickness(ref, 2.0 * bare_f0), InfeasibleError);

    // a heavy electrode needs several bracket expansions
    const double low = calibrate_electrode_thickness(ref, 0.2e6);
    solved.electrode_thickness = low;
    CHECK(rel_err(derive_lumped(solved).lumped_frequency, 0.2e6) <= 1e-6);
}

TEST_CASE("solve_membrane_thickness") {
    CHECK(rel_err(f0_with(ref, 3e-6), 1.753e6) < 0.001);
    const double h = solve_membrane_thickness(ref, 1.753e6, 1e-6, 6e-6);
    CHECK(rel_err(h, 3e-6) < 0.005);
    CHECK(rel_err(f0_with(ref, h), 1.753e6) <= 1e-6);

    CHECK(solve_membrane_thickness(ref, f0_with(ref, 1e-6), 1e-6, 6e-6) == 1e-6);

    CHECK(f0_with(ref, 1e-6) < 1.753e6);
    CHECK(f0_with(ref, 2e-6) < 1.753e6);
    CHECK_THROWS_AS(solve_membrane_thickness(ref, 1.753e6, 1e-6, 2e-6), BracketError);
    CHECK_THROWS_AS(solve_membrane_thickness(ref, 1.753e6, 2e-6, 1e-6), InvalidInput);
}

TEST_CASE("grid_sweep over membrane thickness") {
    SweepSpec spec;
    spec.parameter = SweepParameter::membrane_thickness;
    spec.from = 1e-6;
    spec.to = 6e-6;
    spec.steps = 6;
    spec.metrics = {"f0", "K"};
    const auto rows = grid_sweep(ref, spec);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double h = 1e-6 + 1e-6 * static_cast<double>(i);
        CHECK(rel_err(rows[i].parameter_value, h) < 1e-12);
        CHECK(rel_err(rows[i].metric("f0"), f0_with(ref, rows[i].parameter_value)) < 1e-15);
        if (i > 0) CHECK(rows[i].metric("f0") > rows[i - 1].metric("f0"));
        CHECK(rows[i].metrics[0].first == "f0");
        CHECK(rows[i].metrics[1].first == "K");
    }
    CHECK(grid_sweep(ref, spec) == rows);

    spec.steps = 2;
    const auto two = grid_sweep(ref, spec);
    REQUIRE(two.size() == 2);
    CHECK(two[0].parameter_value == 1e-6);
    CHECK(two[1].parameter_value == 6e-6);
}

TEST_CASE("grid_sweep over the gap follows V_pi ~ d^1.5") {
    SweepSpec spec;
    spec.parameter = SweepParameter::gap;
    spec.from = 0.5e-6;
    spec.to = 1.0e-6;
    spec.steps = 11;
    spec.metrics = {"V_pi", "C0"};
    const auto rows = grid_sweep(ref, spec);
    CHECK(rel_err(rows.back().metric("V_pi") / rows.front().metric("V_pi"), std::pow(2.0, 1.5)) < 1e-9);
    CHECK(rel_err(rows.front().metric("C0") / rows.back().metric("C0"), 2.0) < 1e-12);
}

TEST_CASE("grid_sweep over bias voltage crosses pull-in") {
    const double v_pi = derive_lumped(ref).pull_in_voltage;
    SweepSpec spec;
    spec.parameter = SweepParameter::bias_voltage;
    spec.from = 0.0;
    spec.to = 150.0;
    spec.steps = 16;
    spec.metrics = {"x_eq", "collapsed"};
    const auto rows = grid_sweep(ref, spec);
    for (const auto& row : rows) {
        const bool collapsed = row.parameter_value > v_pi;
        CHECK(row.metric("collapsed") == (collapsed ? 1.0 : 0.0));
        if (collapsed) {
            CHECK(row.metric("x_eq") == ref.gap);
        } else {
            CHECK(row.metric("x_eq") < ref.gap / 3.0);
        }
    }
}

TEST_CASE("grid_sweep with circuit metrics") {
    SweepSpec spec;
    spec.parameter = SweepParameter::sensor_count;
    spec.from = 1;
    spec.to = 8;
    spec.steps = 8;
    spec.metrics = {"eta_linear_no_amp", "eta_ogmr_closed_form"};
    SweepContext ctx{ogmr_template(), linear_template()};
    const auto rows = grid_sweep(ref, spec, ctx);
    REQUIRE(rows.size() == 8);
    for (const auto& row : rows) {
        CHECK(rel_err(row.metric("eta_linear_no_amp"), 1.39e4 * std::sqrt(row.parameter_value)) < 0.02);
    }
    CHECK(rel_err(rows.back().metric("eta_ogmr_closed_form") / rows.front().metric("eta_ogmr_closed_form"), std::sqrt(8.0)) < 1e-12);

    SweepSpec h = spec;
    h.parameter = SweepParameter::membrane_thickness;
    h.from = 2e-6;
    h.to = 4e-6;
    h.steps = 3;
    h.metrics = {"eta_ogmr", "eta_linear"};
    CHECK(grid_sweep(ref, h, ctx).size() == 3);
}

TEST_CASE("grid_sweep configuration errors") {
    SweepSpec spec;
    spec.parameter = SweepParameter::gap;
    spec.from = 0.5e-6;
    spec.to = 1e-6;
    spec.steps = 3;
    spec.metrics = {"eta_ogmr"};
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);
    spec.metrics = {"eta_linear"};
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);
    spec.metrics = {"bogus"};
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);
    spec.metrics = {"f0", "f0"};
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);
    spec.metrics = {"f0"};
    spec.steps = 1;
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);
    spec.steps = 3;
    spec.from = 2e-6;
    CHECK_THROWS_AS(grid_sweep(ref, spec), ConfigError);

    SweepSpec n;
    n.parameter = SweepParameter::sensor_count;
    n.from = 1;
    n.to = 4;
    n.steps = 4;
    n.metrics = {"f0"};
    CHECK_THROWS_AS(grid_sweep(ref, n, SweepContext{ogmr_template(), std::nullopt}), ConfigError);
    n.metrics = {"eta_ogmr"};
    n.to = 4.5;
    CHECK_THROWS_AS(grid_sweep(ref, n, SweepContext{ogmr_template(), std::nullopt}), ConfigError);
}

TEST_CASE("grid_sweep propagates evaluation failures") {
    SweepSpec spec;
    spec.parameter = SweepParameter::electrode_thickness;
    spec.from = 0.0;
    spec.to = 1e-6;
    spec.steps = 3;
    spec.metrics = {"f0"};
    CmutCell bad = ref;
    bad.membrane.density = -1.0;
    CHECK_THROWS_AS(grid_sweep(bad, spec), InvalidInput);
}
