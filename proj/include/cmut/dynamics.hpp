#pragma once

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "cmut/model_core.hpp"

namespace cmut {

struct ZeroDrive {
    bool operator==(const ZeroDrive&) const = default;
};
struct ConstantDrive {
    double dc = 0.0;
    bool operator==(const ConstantDrive&) const = default;
};
/// dc + ac * sin(2 pi f t + phase)
struct BiasedSineDrive {
    double dc = 0.0;
    double ac = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    bool operator==(const BiasedSineDrive&) const = default;
};
/// amplitude on [start, start + width), zero elsewhere.
struct PulseDrive {
    double amplitude = 0.0;
    double start = 0.0;
    double width = 0.0;
    bool operator==(const PulseDrive&) const = default;
};

using DriveSignal = std::variant<ZeroDrive, ConstantDrive, BiasedSineDrive, PulseDrive>;

void validate_drive(const DriveSignal& drive);
double drive_value(const DriveSignal& drive, double t);

struct SimConfig {
    double dt = 0.0;        // s
    double duration = 0.0;  // s
    /// Collapse is declared once w >= contact_margin * d.
    double contact_margin = 0.999;
    /// Uniform received pressure on the plate, Pa.
    double external_pressure = 0.0;
    /// Optional sinusoidal pressure component amplitude * sin(2 pi f t), Pa.
    double pressure_amplitude = 0.0;
    double pressure_frequency = 0.0;

    /// dt = 1/(200 f0); duration as given.
    static SimConfig for_cell(const CmutCell& cell, double duration);

    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

/// Starting state of the membrane. The default (rest) is what production runs use;
/// other values exist for free-decay experiments.
struct InitialState {
    double displacement = 0.0;
    double velocity = 0.0;
};

struct CollapseEvent {
    double time = 0.0;
    bool operator==(const CollapseEvent&) const = default;
};

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> displacement;
    std::vector<double> velocity;
    std::vector<double> electrostatic_force;
    std::vector<double> capacitance;
    std::optional<CollapseEvent> collapse;

    std::size_t size() const { return times.size(); }
    bool operator==(const TimeSeries&) const = default;
};

/// Fixed-step RK4 integration of M w'' + R w' + K w = F_e(V(t), w) + p(t) A.
///
/// Integration stops at the first sample with w >= contact_margin * d and the
/// series ends with that sample. Throws DivergenceError on a non-finite state.
TimeSeries simulate(const CmutCell& cell, const DriveSignal& drive, const SimConfig& config,
                    const InitialState& initial = {});

/// Small-signal compliance H(j w) = 1 / (K - M w^2 + j w R), m/N.
std::complex<double> mechanical_response(const CmutCell& cell, double frequency);

struct ResonancePeak {
    double frequency = 0.0;   // Hz
    double compliance = 0.0;  // |H| at the peak, m/N
    /// The maximum sits on an interval endpoint: the bracket does not contain the peak.
    bool at_endpoint = false;
};

/// Golden-section maximisation of |H| on [f_lo, f_hi] to 1e-6 relative in frequency.
ResonancePeak resonance_peak(const CmutCell& cell, double f_lo, double f_hi);

}  // namespace cmut
