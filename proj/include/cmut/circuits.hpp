#pragma once

#include <complex>
#include <variant>

namespace cmut {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

/// Single sensor biased through a resistor: the usual microphone front end.
struct SgsrCircuit {
    double resistance = 0.0;         // ohm
    double rest_capacitance = 0.0;   // F
    double input_amplitude = 0.0;    // V
    double angular_frequency = 0.0;  // rad/s
    double temperature = 300.0;      // K
    double boltzmann_constant = kBoltzmann;

    void validate() const;
};

struct FixedResistance {
    double ohms = 0.0;
    bool operator==(const FixedResistance&) const = default;
};
/// R = n |Z| with |Z| = 1 / (omega C).
struct MatchedResistance {
    bool operator==(const MatchedResistance&) const = default;
};
using ResistanceRule = std::variant<FixedResistance, MatchedResistance>;

/// n identical sensors in series with one bias resistor.
struct OgmrSerialCircuit {
    int sensor_count = 1;
    ResistanceRule resistance_rule = MatchedResistance{};
    double capacitance = 0.0;        // per sensor, F
    double input_amplitude = 0.0;    // V
    double angular_frequency = 0.0;  // rad/s
    double temperature = 300.0;      // K
    double boltzmann_constant = kBoltzmann;

    void validate() const;
};

struct AmplifierSpec {
    double current_noise_density = 22e-12;    // A/sqrt(Hz)
    double voltage_noise_density = 1.673e-9;  // V/sqrt(Hz)

    bool operator==(const AmplifierSpec&) const = default;
};

/// Inverting op-amp stage with n series sensors in the feedback path (gain -n).
struct LinearOgmrCircuit {
    int sensor_count = 1;
    double rest_capacitance = 0.0;   // F
    double gap = 0.0;                // m
    double input_amplitude = 0.0;    // V
    double angular_frequency = 0.0;  // rad/s
    double temperature = 300.0;      // K
    AmplifierSpec amplifier;
    double bandwidth = 0.0;          // Hz
    double boltzmann_constant = kBoltzmann;

    void validate() const;
};

struct LinearOutput {
    double dc = 0.0;  // V
    double ac = 0.0;  // V
};

std::complex<double> sgsr_output(const SgsrCircuit& circuit, double delta_c);
double sgsr_noise(const SgsrCircuit& circuit, double bandwidth);

/// Resistance after applying the circuit's rule.
double ogmr_resistance(const OgmrSerialCircuit& circuit);
std::complex<double> ogmr_output(const OgmrSerialCircuit& circuit, double delta_c);
/// n / (2 pi R C)
double ogmr_bandwidth(const OgmrSerialCircuit& circuit);
double ogmr_noise(const OgmrSerialCircuit& circuit);
/// |V_out(n, 0) - V_out(n, dC)| / V_noise(n), evaluated from the definition.
double ogmr_snr(const OgmrSerialCircuit& circuit, double delta_c);

/// (dC/C) V_in / sqrt(kT/C (2/pi + 1)): the constant of the reduced SNR expressions.
double ogmr_snr_constant(double delta_c_over_c, double input_amplitude, double temperature, double capacitance,
                         double boltzmann_constant = kBoltzmann);

/// Closed form of the serial-circuit SNR: K sqrt(n) / (1 + n Z/R)^2, or
/// K sqrt(n) / 4 when matched (z_over_r ignored). Kept separate from ogmr_snr
/// because the two disagree in trend under the matched rule.
double ogmr_snr_closed_form(int n, double k_const, double z_over_r, bool matched);

LinearOutput linear_output(const LinearOgmrCircuit& circuit, double x);
/// sqrt(n kT/C0 + (I_N |Z|)^2 df n^2/(n+1) + V_N^2 df n)
double linear_noise(const LinearOgmrCircuit& circuit);
double linear_snr(const LinearOgmrCircuit& circuit, double x, bool include_amp_noise);

/// Johnson-Nyquist density sqrt(4 k R T), V/sqrt(Hz).
double thermal_noise_density(double resistance, double temperature, double boltzmann_constant = kBoltzmann);

}  // namespace cmut
