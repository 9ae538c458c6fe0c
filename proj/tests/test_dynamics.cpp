#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmut/dynamics.hpp"
#include "cmut/errors.hpp"
#include "test_support.hpp"

using namespace cmut;
using cmut::test::rel_err;

namespace {

const CmutCell ref = CmutCell::reference();
const LumpedParams ref_p = derive_lumped(ref);
constexpr double two_pi = 2.0 * std::numbers::pi;

/// Peak |w| over the trailing `periods` of a forced run.
double steady_amplitude(const TimeSeries& ts, double frequency, double periods) {
    const double t_end = ts.times.back();
    double peak = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts.times[i] >= t_end - periods / frequency) peak = std::max(peak, std::abs(ts.displacement[i]));
    }
    return peak;
}

SimConfig forced(double force_amplitude, double frequency, double duration) {
    SimConfig config = SimConfig::for_cell(ref, duration);
    config.pressure_amplitude = force_amplitude / ref_p.area;
    config.pressure_frequency = frequency;
    return config;
}

}  // namespace

TEST_CASE("drive_value") {
    CHECK(drive_value(ZeroDrive{}, 1e-6) == 0.0);
    CHECK(drive_value(ConstantDrive{42.0}, 3e-6) == 42.0);
    CHECK(drive_value(BiasedSineDrive{10.0, 5.0, 1e6, 0.0}, 0.0) == 10.0);
    CHECK(drive_value(BiasedSineDrive{10.0, 5.0, 1e6, 0.0}, 0.25e-6) == doctest::Approx(15.0).epsilon(1e-12));
    const PulseDrive pulse{132.75, 0.0, 1e-7};
    CHECK(drive_value(pulse, 5e-8) == 132.75);
    CHECK(drive_value(pulse, 2e-7) == 0.0);
    CHECK(drive_value(pulse, 1e-7) == 0.0);  // half-open window
    CHECK(drive_value(PulseDrive{1.0, 1e-6, 1e-6}, 0.5e-6) == 0.0);
}

TEST_CASE("drive and config validation") {
    CHECK_THROWS_AS(validate_drive(BiasedSineDrive{0.0, 1.0, 0.0, 0.0}), InvalidInput);
    CHECK_THROWS_AS(validate_drive(PulseDrive{1.0, 0.0, 0.0}), InvalidInput);
    SimConfig bad = SimConfig::for_cell(ref, 1e-6);
    bad.contact_margin = 1.0;
    CHECK_THROWS_AS(simulate(ref, ZeroDrive{}, bad), InvalidInput);
    bad = SimConfig::for_cell(ref, 1e-6);
    bad.dt = 2e-6;
    CHECK_THROWS_AS(simulate(ref, ZeroDrive{}, bad), InvalidInput);
}

TEST_CASE("zero forcing leaves the membrane at rest") {
    const TimeSeries ts = simulate(ref, ZeroDrive{}, SimConfig::for_cell(ref, 5e-6));
    CHECK(!ts.collapse);
    CHECK(std::all_of(ts.displacement.begin(), ts.displacement.end(), [](double w) { return w == 0.0; }));
    CHECK(std::all_of(ts.velocity.begin(), ts.velocity.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("time series layout") {
    const SimConfig config = SimConfig::for_cell(ref, 2e-6);
    const TimeSeries ts = simulate(ref, ConstantDrive{50.0}, config);
    const auto n = static_cast<std::size_t>(std::llround(config.duration / config.dt)) + 1;
    REQUIRE(ts.size() == n);
    CHECK(ts.displacement.size() == n);
    CHECK(ts.velocity.size() == n);
    CHECK(ts.electrostatic_force.size() == n);
    CHECK(ts.capacitance.size() == n);
    for (std::size_t i = 1; i < n; ++i) {
        CHECK(ts.times[i] > ts.times[i - 1]);
        CHECK(rel_err(ts.times[i] - ts.times[i - 1], config.dt) < 1e-6);
    }
    CHECK(ts.capacitance[0] == capacitance_at(ref, 0.0));
    CHECK(ts.electrostatic_force[7] == doctest::Approx(electrostatic_force(ref, 50.0, ts.displacement[7])));
}

TEST_CASE("constant 100 V settles on the static equilibrium") {
    const TimeSeries ts = simulate(ref, ConstantDrive{100.0}, SimConfig::for_cell(ref, 20e-6));
    REQUIRE(!ts.collapse);
    const double x_eq = std::get<Stable>(static_equilibrium(ref, 100.0)).displacement;
    CHECK(rel_err(ts.displacement.back(), x_eq) < 0.01);
    CHECK(rel_err(ts.displacement.back(), 7.35e-8) < 0.01);
}

TEST_CASE("constant 140 V collapses") {
    const SimConfig config = SimConfig::for_cell(ref, 20e-6);
    const TimeSeries ts = simulate(ref, ConstantDrive{140.0}, config);
    REQUIRE(ts.collapse);
    CHECK(std::isfinite(ts.collapse->time));
    CHECK(ts.collapse->time == ts.times.back());
    CHECK(ts.displacement.back() >= config.contact_margin * ref.gap);
    CHECK(ts.displacement[ts.size() - 2] < config.contact_margin * ref.gap);
    CHECK(ts.size() < static_cast<std::size_t>(config.duration / config.dt));
}

TEST_CASE("collapse agrees with the static analysis around pull-in") {
    const double v_pi = ref_p.pull_in_voltage;
    for (double fraction : {0.5, 0.9, 0.99, 1.01, 1.1, 1.5}) {
        CAPTURE(fraction);
        const double v = fraction * v_pi;
        const TimeSeries ts = simulate(ref, ConstantDrive{v}, SimConfig::for_cell(ref, 50.0 / ref_p.lumped_frequency));
        CHECK(ts.collapse.has_value() == is_collapsed(static_equilibrium(ref, v)));
    }
}

TEST_CASE("simulate is deterministic") {
    const SimConfig config = SimConfig::for_cell(ref, 3e-6);
    const DriveSignal drive = BiasedSineDrive{40.0, 20.0, 1.5e6, 0.3};
    CHECK(simulate(ref, drive, config) == simulate(ref, drive, config));
}

TEST_CASE("free decay never gains energy") {
    const TimeSeries ts = simulate(ref, ZeroDrive{}, SimConfig::for_cell(ref, 10e-6), InitialState{0.1e-6, 0.0});
    const double m = ref_p.total_mass;
    const double k = ref_p.spring_constant;
    auto energy = [&](std::size_t i) {
        const double w = ts.displacement[i];
        const double v = ts.velocity[i];
        return 0.5 * m * v * v + 0.5 * k * w * w;
    };
    const double e0 = energy(0);
    int increases = 0;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (energy(i) > energy(i - 1) * (1.0 + 1e-9) + 1e-30 * e0) ++increases;
    }
    CHECK(increases == 0);
    CHECK(energy(ts.size() - 1) < 1e-6 * e0);
}

TEST_CASE("RK4 error drops at least 8x when dt halves") {
    // Error of w(T) in the transient of the 100 V step, against a run with dt/64.
    const double dt = 1.0 / (25.0 * ref_p.lumped_frequency);
    const double t_end = 64.0 * dt;
    auto w_at_end = [&](double step) {
        SimConfig config;
        config.dt = step;
        config.duration = t_end;
        return simulate(ref, ConstantDrive{100.0}, config).displacement.back();
    };
    const double reference = w_at_end(dt / 64.0);
    const double e1 = std::abs(w_at_end(dt) - reference);
    const double e2 = std::abs(w_at_end(dt / 2.0) - reference);
    const double e4 = std::abs(w_at_end(dt / 4.0) - reference);
    CAPTURE(e1);
    CAPTURE(e2);
    CAPTURE(e4);
    CHECK(e1 / e2 >= 8.0);
    CHECK(e2 / e4 >= 8.0);
}

TEST_CASE("mechanical_response limits") {
    const double k = ref_p.spring_constant;
    CHECK(rel_err(std::abs(mechanical_response(ref, 1.0)), 1.0 / k) < 1e-9);
    CHECK(rel_err(1.0 / k, 2.87e-5) < 0.01);

    const double f0 = ref_p.lumped_frequency;
    const auto h0 = mechanical_response(ref, f0);
    const double omega0 = two_pi * f0;
    CHECK(std::abs(h0.real()) < 1e-9 * std::abs(h0.imag()));
    CHECK(rel_err(std::abs(h0), 1.0 / (omega0 * ref_p.damping)) < 1e-9);
    CHECK(h0.imag() < 0.0);
    CHECK_THROWS_AS(mechanical_response(ref, 0.0), InvalidInput);
}

TEST_CASE("sinusoidal steady state matches |H|") {
    const double f0 = ref_p.lumped_frequency;
    for (double ratio : {0.5, 1.0, 1.5}) {
        CAPTURE(ratio);
        const double f = ratio * f0;
        const double force = 1e-6;
        const TimeSeries ts = simulate(ref, ZeroDrive{}, forced(force, f, 20e-6));
        REQUIRE(!ts.collapse);
        CHECK(rel_err(steady_amplitude(ts, f, 5.0), std::abs(mechanical_response(ref, f)) * force) < 0.01);
    }
}

TEST_CASE("small-signal response is linear in the forcing") {
    const double f = 0.7 * ref_p.lumped_frequency;
    const double a1 = steady_amplitude(simulate(ref, ZeroDrive{}, forced(1e-8, f, 15e-6)), f, 5.0);
    const double a2 = steady_amplitude(simulate(ref, ZeroDrive{}, forced(2e-8, f, 15e-6)), f, 5.0);
    CHECK(rel_err(a2 / a1, 2.0) < 0.005);
}

TEST_CASE("resonance_peak against a dense scan") {
    auto scan = [](const CmutCell& cell, double lo, double hi) {
        double best_f = lo, best = 0.0;
        const int n = 1'000'000;
        for (int i = 0; i <= n; ++i) {
            const double f = lo + (hi - lo) * i / n;
            const double m = std::abs(mechanical_response(cell, f));
            if (m > best) {
                best = m;
                best_f = f;
            }
        }
        return best_f;
    };

    const ResonancePeak peak = resonance_peak(ref, 0.5e6, 3e6);
    CHECK(!peak.at_endpoint);
    CHECK(rel_err(peak.frequency, scan(ref, 0.5e6, 3e6)) < 1e-3);
    CHECK(peak.frequency < ref_p.lumped_frequency);
    CHECK(rel_err(peak.compliance, std::abs(mechanical_response(ref, peak.frequency))) < 1e-12);
    // Damped peak with quality factor taken on the total moving mass.
    const double q_total = two_pi * ref_p.lumped_frequency * ref_p.total_mass / ref_p.damping;
    CHECK(rel_err(peak.frequency, ref_p.lumped_frequency * std::sqrt(1.0 - 1.0 / (2.0 * q_total * q_total))) < 1e-5);

    CmutCell light = ref;
    light.damping_multiplier = 1.0;
    light.environment.air_density = 1e-6;
    const ResonancePeak undamped = resonance_peak(light, 0.5e6, 3e6);
    CHECK(rel_err(undamped.frequency, derive_lumped(light).lumped_frequency) < 1e-3);
}

TEST_CASE("resonance_peak flags a bracket that misses the peak") {
    const ResonancePeak below = resonance_peak(ref, 0.2e6, 0.8e6);
    CHECK(below.at_endpoint);
    CHECK(below.frequency == 0.8e6);
    const ResonancePeak above = resonance_peak(ref, 2.5e6, 4e6);
    CHECK(above.at_endpoint);
    CHECK(above.frequency == 2.5e6);
    CHECK_THROWS_AS(resonance_peak(ref, 2e6, 1e6), InvalidInput);
}

TEST_CASE("non-finite state raises a divergence error") {
    // Overdamped and wildly under-resolved: the RK4 amplification factor is real and huge.
    CmutCell cell = ref;
    cell.damping_multiplier = 1e9;
    SimConfig config;
    config.dt = 1e-3;
    config.duration = 1.0;
    config.external_pressure = -1e3;
    CHECK_THROWS_AS(simulate(cell, ZeroDrive{}, config), DivergenceError);
}
