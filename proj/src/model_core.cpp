#include "cmut/model_core.hpp"

#include <cmath>
#include <numbers>

#include "cmut/errors.hpp"

namespace cmut {

namespace {

constexpr double pi = std::numbers::pi;

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw InvalidInput(message);
    }
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void check_displacement(const CmutCell& cell, double x) {
    require(std::isfinite(x), "displacement must be finite");
    require(x >= 0.0, "displacement must be non-negative");
    if (x >= cell.gap) {
        throw ContactError("displacement " + std::to_string(x) + " m reaches the gap (plates touching)");
    }
}

double plate_area(const CmutCell& cell) { return pi * cell.radius * cell.radius; }

double spring_constant(const CmutCell& cell) {
    const auto& m = cell.membrane;
    const double h = cell.membrane_thickness;
    const double rigidity = m.youngs_modulus * h * h * h / (12.0 * (1.0 - m.poisson_ratio * m.poisson_ratio));
    return 192.0 * pi * rigidity / (cell.radius * cell.radius);
}

}  // namespace

Material Material::silicon() { return {"Si", 1.69e11, 0.299, 2330.0}; }

Material Material::aluminum() { return {"Al", 7e10, 0.35, 2700.0}; }

void Material::validate() const {
    require(positive(youngs_modulus), "material '" + name + "': youngs_modulus must be > 0");
    require(std::isfinite(poisson_ratio) && poisson_ratio >= 0.0 && poisson_ratio < 0.5,
            "material '" + name + "': poisson_ratio must be in [0, 0.5)");
    require(positive(density), "material '" + name + "': density must be > 0");
}

void Environment::validate() const {
    require(positive(temperature), "environment: temperature must be > 0");
    require(positive(air_density), "environment: air_density must be > 0");
    require(positive(sound_speed), "environment: sound_speed must be > 0");
    require(positive(vacuum_permittivity), "environment: vacuum_permittivity must be > 0");
    require(positive(boltzmann_constant), "environment: boltzmann_constant must be > 0");
}

CmutCell CmutCell::reference() {
    CmutCell cell;
    cell.radius = 85e-6;
    cell.membrane_thickness = 3e-6;
    cell.gap = 0.7e-6;
    cell.electrode_thickness = 2.07e-6;
    return cell;
}

void CmutCell::validate() const {
    require(positive(radius), "cell: radius must be > 0");
    require(positive(membrane_thickness), "cell: membrane_thickness must be > 0");
    require(positive(gap), "cell: gap must be > 0");
    require(std::isfinite(electrode_thickness) && electrode_thickness >= 0.0,
            "cell: electrode_thickness must be >= 0");
    require(std::isfinite(damping_multiplier) && damping_multiplier >= 1.0,
            "cell: damping_multiplier must be >= 1");
    membrane.validate();
    electrode.validate();
    environment.validate();
}

LumpedParams derive_lumped(const CmutCell& cell) {
    cell.validate();
    const auto& env = cell.environment;
    const auto& mem = cell.membrane;
    const double ra = cell.radius;
    const double h = cell.membrane_thickness;
    const double d = cell.gap;

    LumpedParams p;
    p.area = plate_area(cell);
    p.rest_capacitance = env.vacuum_permittivity * p.area / d;
    p.flexural_rigidity = mem.youngs_modulus * h * h * h / (12.0 * (1.0 - mem.poisson_ratio * mem.poisson_ratio));
    p.spring_constant = spring_constant(cell);
    p.membrane_mass = mem.density * p.area * h;
    p.radiation_mass = 8.0 * env.air_density * ra * ra * ra / 3.0;
    p.electrode_mass = cell.electrode.density * p.area * cell.electrode_thickness;
    p.total_mass = p.membrane_mass + p.radiation_mass + p.electrode_mass;

    p.plate_frequency = 2.54 * h / (pi * ra * ra) *
                        std::sqrt(mem.youngs_modulus / (3.0 * mem.density * (1.0 - mem.poisson_ratio * mem.poisson_ratio)));
    const double omega0 = std::sqrt(p.spring_constant / p.total_mass);
    p.lumped_frequency = omega0 / (2.0 * pi);

    // Baffled-piston radiation resistance; k is the acoustic wavenumber at resonance.
    const double k = omega0 / env.sound_speed;
    const double radiation_resistance = env.air_density * env.sound_speed * k * k * pi * ra * ra * ra * ra / 2.0;
    p.damping = cell.damping_multiplier * radiation_resistance;
    p.quality_factor = omega0 * p.membrane_mass / p.damping;
    p.pull_in_voltage = std::sqrt(8.0 * p.spring_constant * d * d * d / (27.0 * env.vacuum_permittivity * p.area));
    return p;
}

double capacitance_at(const CmutCell& cell, double x) {
    check_displacement(cell, x);
    return cell.environment.vacuum_permittivity * plate_area(cell) / (cell.gap - x);
}

double electrostatic_force(const CmutCell& cell, double voltage, double x) {
    require(std::isfinite(voltage), "voltage must be finite");
    check_displacement(cell, x);
    const double gap = cell.gap - x;
    return 0.5 * voltage * voltage * cell.environment.vacuum_permittivity * plate_area(cell) / (gap * gap);
}

double small_signal_deflection(const CmutCell& cell, double force) {
    require(std::isfinite(force), "force must be finite");
    return force / derive_lumped(cell).spring_constant;
}

EquilibriumResult static_equilibrium(const CmutCell& cell, double voltage) {
    cell.validate();
    require(std::isfinite(voltage) && voltage >= 0.0, "voltage must be finite and >= 0");
    if (voltage == 0.0) {
        return Stable{0.0};
    }
    const double k = spring_constant(cell);
    const double coeff = 0.5 * voltage * voltage * cell.environment.vacuum_permittivity * plate_area(cell);
    const double d = cell.gap;
    auto net = [&](double x) { return coeff / ((d - x) * (d - x)) - k * x; };

    double lo = 0.0;
    double hi = d / 3.0;
    if (net(hi) > 0.0) {
        return Collapsed{};
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (net(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return Stable{0.5 * (lo + hi)};
}

}  // namespace cmut
