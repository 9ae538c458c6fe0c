#include "cmut/circuits.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cmut/errors.hpp"

namespace cmut {

namespace {

constexpr double pi = std::numbers::pi;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidInput(message);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

double magnitude_z(double omega, double c) { return 1.0 / (omega * c); }

}  // namespace

void SgsrCircuit::validate() const {
    require(positive(resistance), "sgsr: resistance must be > 0");
    require(positive(rest_capacitance), "sgsr: capacitance must be > 0");
    require(positive(input_amplitude), "sgsr: input amplitude must be > 0");
    require(positive(angular_frequency), "sgsr: angular frequency must be > 0");
    require(positive(temperature), "sgsr: temperature must be > 0");
}

void OgmrSerialCircuit::validate() const {
    require(sensor_count >= 1, "ogmr: sensor count must be >= 1");
    if (const auto* fixed = std::get_if<FixedResistance>(&resistance_rule)) {
        require(positive(fixed->ohms), "ogmr: fixed resistance must be > 0");
    }
    require(positive(capacitance), "ogmr: capacitance must be > 0");
    require(positive(input_amplitude), "ogmr: input amplitude must be > 0");
    require(positive(angular_frequency), "ogmr: angular frequency must be > 0");
    require(std::isfinite(temperature) && temperature >= 0.0, "ogmr: temperature must be >= 0");
}

void LinearOgmrCircuit::validate() const {
    require(sensor_count >= 1, "linear: sensor count must be >= 1");
    require(positive(rest_capacitance), "linear: capacitance must be > 0");
    require(positive(gap), "linear: gap must be > 0");
    require(positive(input_amplitude), "linear: input amplitude must be > 0");
    require(positive(angular_frequency), "linear: angular frequency must be > 0");
    require(std::isfinite(temperature) && temperature >= 0.0, "linear: temperature must be >= 0");
    require(positive(bandwidth), "linear: bandwidth must be > 0");
    require(std::isfinite(amplifier.current_noise_density) && amplifier.current_noise_density >= 0.0,
            "linear: current noise density must be >= 0");
    require(std::isfinite(amplifier.voltage_noise_density) && amplifier.voltage_noise_density >= 0.0,
            "linear: voltage noise density must be >= 0");
}

std::complex<double> sgsr_output(const SgsrCircuit& circuit, double delta_c) {
    circuit.validate();
    require(circuit.rest_capacitance + delta_c > 0.0, "sgsr: C + dC must be > 0");
    const std::complex<double> denom(1.0, circuit.angular_frequency * circuit.resistance *
                                               (circuit.rest_capacitance + delta_c));
    return circuit.input_amplitude / denom;
}

double sgsr_noise(const SgsrCircuit& circuit, double bandwidth) {
    circuit.validate();
    require(std::isfinite(bandwidth) && bandwidth >= 0.0, "sgsr: bandwidth must be >= 0");
    const double kt = circuit.boltzmann_constant * circuit.temperature;
    return std::sqrt(4.0 * kt * circuit.resistance * bandwidth + kt / circuit.rest_capacitance);
}

double ogmr_resistance(const OgmrSerialCircuit& circuit) {
    if (const auto* fixed = std::get_if<FixedResistance>(&circuit.resistance_rule)) {
        return fixed->ohms;
    }
    return circuit.sensor_count * magnitude_z(circuit.angular_frequency, circuit.capacitance);
}

std::complex<double> ogmr_output(const OgmrSerialCircuit& circuit, double delta_c) {
    circuit.validate();
    require(circuit.capacitance + delta_c > 0.0, "ogmr: C + dC must be > 0");
    const double n = circuit.sensor_count;
    const double r = ogmr_resistance(circuit);
    const std::complex<double> denom(n, circuit.angular_frequency * r * (circuit.capacitance + delta_c));
    return n * circuit.input_amplitude / denom;
}

double ogmr_bandwidth(const OgmrSerialCircuit& circuit) {
    circuit.validate();
    return circuit.sensor_count / (2.0 * pi * ogmr_resistance(circuit) * circuit.capacitance);
}

double ogmr_noise(const OgmrSerialCircuit& circuit) {
    const double bandwidth = ogmr_bandwidth(circuit);
    const double kt = circuit.boltzmann_constant * circuit.temperature;
    return std::sqrt(4.0 * kt * ogmr_resistance(circuit) * bandwidth + circuit.sensor_count * kt / circuit.capacitance);
}

double ogmr_snr(const OgmrSerialCircuit& circuit, double delta_c) {
    require(std::isfinite(delta_c) && delta_c > 0.0, "ogmr: dC must be > 0");
    const auto signal = ogmr_output(circuit, 0.0) - ogmr_output(circuit, delta_c);
    return std::abs(signal) / ogmr_noise(circuit);
}

double ogmr_snr_constant(double delta_c_over_c, double input_amplitude, double temperature, double capacitance,
                         double boltzmann_constant) {
    require(positive(capacitance), "capacitance must be > 0");
    const double kt_over_c = boltzmann_constant * temperature / capacitance;
    return delta_c_over_c * input_amplitude / std::sqrt(kt_over_c * (2.0 / pi + 1.0));
}

double ogmr_snr_closed_form(int n, double k_const, double z_over_r, bool matched) {
    require(n >= 1, "sensor count must be >= 1");
    const double root_n = std::sqrt(static_cast<double>(n));
    if (matched) {
        return k_const * root_n / 4.0;
    }
    const double s = 1.0 + n * z_over_r;
    return k_const * root_n / (s * s);
}

LinearOutput linear_output(const LinearOgmrCircuit& circuit, double x) {
    circuit.validate();
    require(std::isfinite(x) && x >= 0.0, "linear: displacement must be >= 0");
    if (x >= circuit.gap) {
        throw ContactError("linear: displacement " + std::to_string(x) + " m reaches the gap (plates touching)");
    }
    const double n = circuit.sensor_count;
    return {-n * circuit.input_amplitude, n * x / circuit.gap * circuit.input_amplitude};
}

namespace {

double linear_noise_power(const LinearOgmrCircuit& c, bool include_amp_noise) {
    const double n = c.sensor_count;
    double power = n * c.boltzmann_constant * c.temperature / c.rest_capacitance;
    if (include_amp_noise) {
        const double iz = c.amplifier.current_noise_density * magnitude_z(c.angular_frequency, c.rest_capacitance);
        const double vn = c.amplifier.voltage_noise_density;
        power += iz * iz * c.bandwidth * n * n / (n + 1.0) + vn * vn * c.bandwidth * n;
    }
    return power;
}

}  // namespace

double linear_noise(const LinearOgmrCircuit& circuit) {
    circuit.validate();
    return std::sqrt(linear_noise_power(circuit, true));
}

double linear_snr(const LinearOgmrCircuit& circuit, double x, bool include_amp_noise) {
    const LinearOutput out = linear_output(circuit, x);
    return out.ac / std::sqrt(linear_noise_power(circuit, include_amp_noise));
}

double thermal_noise_density(double resistance, double temperature, double boltzmann_constant) {
    require(std::isfinite(resistance) && resistance >= 0.0, "resistance must be >= 0");
    require(std::isfinite(temperature) && temperature >= 0.0, "temperature must be >= 0");
    return std::sqrt(4.0 * boltzmann_constant * resistance * temperature);
}

}  // namespace cmut
