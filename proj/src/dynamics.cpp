#include "cmut/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "cmut/errors.hpp"

namespace cmut {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate_drive(const DriveSignal& drive) {
    std::visit(overloaded{
                   [](const ZeroDrive&) {},
                   [](const ConstantDrive& d) {
                       if (!finite(d.dc)) throw InvalidInput("constant drive: dc must be finite");
                   },
                   [](const BiasedSineDrive& d) {
                       if (!finite(d.dc) || !finite(d.ac) || !finite(d.phase))
                           throw InvalidInput("sine drive: dc, ac and phase must be finite");
                       if (!finite(d.frequency) || d.frequency <= 0.0)
                           throw InvalidInput("sine drive: frequency must be > 0");
                   },
                   [](const PulseDrive& d) {
                       if (!finite(d.amplitude) || !finite(d.start))
                           throw InvalidInput("pulse drive: amplitude and start must be finite");
                       if (!finite(d.width) || d.width <= 0.0)
                           throw InvalidInput("pulse drive: width must be > 0");
                   },
               },
               drive);
}

double drive_value(const DriveSignal& drive, double t) {
    return std::visit(overloaded{
                          [](const ZeroDrive&) { return 0.0; },
                          [](const ConstantDrive& d) { return d.dc; },
                          [t](const BiasedSineDrive& d) {
                              return d.dc + d.ac * std::sin(two_pi * d.frequency * t + d.phase);
                          },
                          [t](const PulseDrive& d) {
                              return (t >= d.start && t < d.start + d.width) ? d.amplitude : 0.0;
                          },
                      },
                      drive);
}

SimConfig SimConfig::for_cell(const CmutCell& cell, double duration) {
    SimConfig config;
    config.dt = 1.0 / (200.0 * derive_lumped(cell).lumped_frequency);
    config.duration = duration;
    return config;
}

void SimConfig::validate() const {
    if (!finite(dt) || dt <= 0.0) throw InvalidInput("simulation: dt must be > 0");
    if (!finite(duration) || duration < dt) throw InvalidInput("simulation: duration must be >= dt");
    if (!finite(contact_margin) || contact_margin <= 0.0 || contact_margin >= 1.0)
        throw InvalidInput("simulation: contact_margin must be in (0, 1)");
    if (!finite(external_pressure)) throw InvalidInput("simulation: external_pressure must be finite");
    if (!finite(pressure_amplitude)) throw InvalidInput("simulation: pressure_amplitude must be finite");
    if (pressure_amplitude != 0.0 && (!finite(pressure_frequency) || pressure_frequency <= 0.0))
        throw InvalidInput("simulation: pressure_frequency must be > 0 when pressure_amplitude is set");
}

TimeSeries simulate(const CmutCell& cell, const DriveSignal& drive, const SimConfig& config,
                    const InitialState& initial) {
    const LumpedParams p = derive_lumped(cell);
    validate_drive(drive);
    config.validate();
    if (!finite(initial.displacement) || !finite(initial.velocity) || initial.displacement < 0.0 ||
        initial.displacement >= config.contact_margin * cell.gap) {
        throw InvalidInput("initial displacement must lie in [0, contact_margin * d)");
    }

    const double mass = p.total_mass;
    const double damping = p.damping;
    const double stiffness = p.spring_constant;
    const double eps_area = cell.environment.vacuum_permittivity * p.area;
    const double d = cell.gap;
    const double contact = config.contact_margin * d;
    const double dt = config.dt;

    auto electrostatic = [&](double voltage, double w) {
        const double g = d - w;
        return 0.5 * voltage * voltage * eps_area / (g * g);
    };
    auto pressure = [&](double t) {
        double pr = config.external_pressure;
        if (config.pressure_amplitude != 0.0) {
            pr += config.pressure_amplitude * std::sin(two_pi * config.pressure_frequency * t);
        }
        return pr * p.area;
    };
    // RK4 stages may probe beyond the contact point; clamp there so the force stays finite.
    auto accel = [&](double t, double w, double v) {
        const double wc = std::min(w, contact);
        return (electrostatic(drive_value(drive, t), wc) + pressure(t) - damping * v - stiffness * w) / mass;
    };

    const auto steps = static_cast<long>(std::llround(config.duration / dt));
    TimeSeries ts;
    const auto reserve = static_cast<std::size_t>(steps + 1);
    ts.times.reserve(reserve);
    ts.displacement.reserve(reserve);
    ts.velocity.reserve(reserve);
    ts.electrostatic_force.reserve(reserve);
    ts.capacitance.reserve(reserve);

    auto record = [&](double t, double w, double v) {
        ts.times.push_back(t);
        ts.displacement.push_back(w);
        ts.velocity.push_back(v);
        const double wc = std::min(w, contact);
        ts.electrostatic_force.push_back(electrostatic(drive_value(drive, t), wc));
        ts.capacitance.push_back(eps_area / (d - wc));
    };

    double w = initial.displacement;
    double v = initial.velocity;
    record(0.0, w, v);
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double half = 0.5 * dt;
        const double a1 = accel(t, w, v);
        const double w2 = w + half * v, v2 = v + half * a1;
        const double a2 = accel(t + half, w2, v2);
        const double w3 = w + half * v2, v3 = v + half * a2;
        const double a3 = accel(t + half, w3, v3);
        const double w4 = w + dt * v3, v4 = v + dt * a3;
        const double a4 = accel(t + dt, w4, v4);
        w += dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
        v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if (!finite(w) || !finite(v)) {
            throw DivergenceError("integration diverged at step " + std::to_string(k + 1), k + 1);
        }
        const double t_next = static_cast<double>(k + 1) * dt;
        record(t_next, w, v);
        if (w >= contact) {
            ts.collapse = CollapseEvent{t_next};
            break;
        }
    }
    return ts;
}

std::complex<double> mechanical_response(const CmutCell& cell, double frequency) {
    if (!finite(frequency) || frequency <= 0.0) {
        throw InvalidInput("frequency must be > 0");
    }
    const LumpedParams p = derive_lumped(cell);
    const double omega = two_pi * frequency;
    const std::complex<double> denom(p.spring_constant - p.total_mass * omega * omega, omega * p.damping);
    return 1.0 / denom;
}

ResonancePeak resonance_peak(const CmutCell& cell, double f_lo, double f_hi) {
    if (!finite(f_lo) || !finite(f_hi) || f_lo <= 0.0 || f_hi <= f_lo) {
        throw InvalidInput("resonance_peak requires 0 < f_lo < f_hi");
    }
    const LumpedParams p = derive_lumped(cell);
    auto magnitude = [&](double f) {
        const double omega = two_pi * f;
        return 1.0 / std::hypot(p.spring_constant - p.total_mass * omega * omega, omega * p.damping);
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = f_lo, b = f_hi;
    double c = b - inv_phi * (b - a);
    double e = a + inv_phi * (b - a);
    double fc = magnitude(c), fe = magnitude(e);
    while (b - a > 1e-7 * 0.5 * (a + b)) {
        if (fc > fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = magnitude(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = magnitude(e);
        }
    }
    ResonancePeak peak;
    peak.frequency = 0.5 * (a + b);
    peak.compliance = magnitude(peak.frequency);
    const double tol = 1e-6 * peak.frequency;
    peak.at_endpoint = (peak.frequency - f_lo <= tol) || (f_hi - peak.frequency <= tol);
    if (peak.at_endpoint) {
        // report the true endpoint maximum rather than a point just inside it
        const double end = (peak.frequency - f_lo <= tol) ? f_lo : f_hi;
        peak.frequency = end;
        peak.compliance = magnitude(end);
    }
    return peak;
}

}  // namespace cmut
