#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmut/circuits.hpp"
#include "cmut/model_core.hpp"

namespace cmut {

struct SweepRow {
    double parameter_value = 0.0;
    std::vector<std::pair<std::string, double>> metrics;

    /// Value of the named metric; throws ConfigError if absent.
    double metric(const std::string& name) const;
    bool operator==(const SweepRow&) const = default;
};

enum class SweepParameter {
    sensor_count,
    membrane_thickness,
    vibrating_radius,
    gap,
    electrode_thickness,
    bias_voltage,
};

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name);
std::string to_string(SweepParameter parameter);
/// SI unit of the parameter axis ("m", "V" or "1").
std::string parameter_unit(SweepParameter parameter);

struct SweepSpec {
    SweepParameter parameter = SweepParameter::membrane_thickness;
    double from = 0.0;
    double to = 0.0;
    int steps = 2;
    std::vector<std::string> metrics;
    /// Bias for the x_eq metric when the swept parameter is not the voltage.
    double bias_voltage = 0.0;

    void validate() const;
};

/// Serial-circuit settings that are resolved against a cell. Capacitance
/// defaults to the cell's C0 and frequency to its f0.
struct OgmrTemplate {
    int sensor_count = 1;
    ResistanceRule resistance_rule = MatchedResistance{};
    std::optional<double> capacitance;  // F
    double input_amplitude = 5.0;       // V
    std::optional<double> frequency;    // Hz
    /// Received displacement as a fraction of the gap; sets dC = C x/(d - x).
    double displacement_fraction = 1.0 / 3.0;

    bool operator==(const OgmrTemplate&) const = default;
};

struct LinearTemplate {
    int sensor_count = 1;
    double input_amplitude = 5.0;     // V
    std::optional<double> frequency;  // Hz
    double bandwidth = 0.0;           // Hz
    AmplifierSpec amplifier;
    double displacement_fraction = 1.0 / 3.0;

    bool operator==(const LinearTemplate&) const = default;
};

struct OgmrSetup {
    OgmrSerialCircuit circuit;
    double delta_c = 0.0;  // F
};

struct LinearSetup {
    LinearOgmrCircuit circuit;
    double displacement = 0.0;  // m
};

OgmrSetup build_ogmr(const CmutCell& cell, const OgmrTemplate& tmpl);
LinearSetup build_linear(const CmutCell& cell, const LinearTemplate& tmpl);

/// Rows n = 1..n_max for the serial circuit. Metrics: eta_definition, eta_ratio
/// (eta(n)/eta(1)), eta_closed_form, signal_v, noise_v, resistance_ohm, bandwidth_hz.
std::vector<SweepRow> sweep_sensor_count(const OgmrSerialCircuit& circuit, int n_max, double delta_c);

/// Rows n = 1..n_max for the op-amp circuit. Metrics: eta, eta_ratio,
/// eta_over_sqrt_n, signal_v, noise_v.
std::vector<SweepRow> sweep_sensor_count(const LinearOgmrCircuit& circuit, int n_max, double displacement,
                                         bool include_amp_noise);

/// Rows n = 1..n_max of the closed form only. Metrics: eta_closed_form, eta_ratio.
std::vector<SweepRow> sweep_sensor_count_closed_form(int n_max, double k_const, double z_over_r, bool matched);

/// Electrode thickness that brings f0 to target_f0 (bisection, 1e-6 relative on f0).
/// Throws InfeasibleError when target_f0 exceeds the bare-membrane f0.
double calibrate_electrode_thickness(const CmutCell& cell, double target_f0);

/// Membrane thickness in [h_lo, h_hi] with f0 = target_f0 (electrode held fixed).
/// Throws BracketError when the target lies outside [f0(h_lo), f0(h_hi)].
double solve_membrane_thickness(const CmutCell& cell, double target_f0, double h_lo, double h_hi);

struct SweepContext {
    std::optional<OgmrTemplate> ogmr;
    std::optional<LinearTemplate> linear;
};

/// Names accepted by grid_sweep as metrics.
const std::vector<std::string>& known_metrics();

/// Evaluates spec.metrics on an endpoint-inclusive uniform grid. Grid points are
/// evaluated concurrently and merged by index, so the result does not depend on
/// scheduling.
///
/// Metrics: every LumpedParams field (area, C0, D, K, M_m, M_r, M_ae, M, f1, f0,
/// R, Q, V_pi), x_eq and collapsed for the static equilibrium at the bias voltage
/// (x_eq reads d when collapsed), eta_ogmr, eta_ogmr_closed_form (need an OGMR
/// template), eta_linear, eta_linear_no_amp (need a linear template).
std::vector<SweepRow> grid_sweep(const CmutCell& cell, const SweepSpec& spec, const SweepContext& context = {});

}  // namespace cmut
