#pragma once

#include <string>
#include <variant>

namespace cmut {

struct Material {
    std::string name;
    double youngs_modulus = 0.0;  // Pa
    double poisson_ratio = 0.0;
    double density = 0.0;  // kg/m^3

    static Material silicon();   // isotropic, <110> modulus
    static Material aluminum();

    void validate() const;
    bool operator==(const Material&) const = default;
};

struct Environment {
    double temperature = 300.0;               // K
    double air_density = 1.204;               // kg/m^3
    double sound_speed = 343.0;               // m/s
    double vacuum_permittivity = 8.854e-12;   // F/m
    double boltzmann_constant = 1.380649e-23; // J/K

    void validate() const;
    bool operator==(const Environment&) const = default;
};

/// One circular transducer cell treated as a rigid piston over a parallel-plate gap.
struct CmutCell {
    double radius = 0.0;               // vibrating radius r_a, m
    double membrane_thickness = 0.0;   // h, m
    double gap = 0.0;                  // d, m
    double electrode_thickness = 0.0;  // t_ae, m
    Material membrane = Material::silicon();
    Material electrode = Material::aluminum();
    /// Total damping expressed as a multiple of the radiation resistance.
    double damping_multiplier = 50.0;
    Environment environment;

    /// 85 um radius, 3 um silicon membrane, 0.7 um gap, 2.07 um aluminium electrode.
    static CmutCell reference();

    void validate() const;
    bool operator==(const CmutCell&) const = default;
};

struct LumpedParams {
    double area = 0.0;                // m^2
    double rest_capacitance = 0.0;    // F
    double flexural_rigidity = 0.0;   // N*m
    double spring_constant = 0.0;     // N/m
    double membrane_mass = 0.0;       // kg
    double radiation_mass = 0.0;      // kg
    double electrode_mass = 0.0;      // kg
    double total_mass = 0.0;          // kg
    double plate_frequency = 0.0;     // Hz, clamped-plate formula
    double lumped_frequency = 0.0;    // Hz, sqrt(K/M)/2pi
    double damping = 0.0;             // kg/s
    double quality_factor = 0.0;
    double pull_in_voltage = 0.0;     // V
};

struct Stable {
    double displacement = 0.0;  // m
};
struct Collapsed {};

using EquilibriumResult = std::variant<Stable, Collapsed>;

inline bool is_collapsed(const EquilibriumResult& r) {
    return std::holds_alternative<Collapsed>(r);
}

LumpedParams derive_lumped(const CmutCell& cell);

/// Parallel-plate capacitance with the membrane displaced x towards the substrate.
double capacitance_at(const CmutCell& cell, double x);

/// Attractive electrostatic force 0.5 V^2 eps A / (d - x)^2; independent of polarity.
double electrostatic_force(const CmutCell& cell, double voltage, double x);

double small_signal_deflection(const CmutCell& cell, double force);

/// Smallest root of K x = F_e(V, x) on [0, d/3], or Collapsed when none exists.
///
/// The net force F_e - K x is convex in x and its value at d/3 equals
/// K d / 3 (V^2 / V_pi^2 - 1), so a stable root exists exactly when that value
/// is non-positive. The root is then bracketed by [0, d/3] and found by
/// bisection, which is run until the bracket stops shrinking (well below the
/// 1e-6 d requirement).
EquilibriumResult static_equilibrium(const CmutCell& cell, double voltage);

}  // namespace cmut
