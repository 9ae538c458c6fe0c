#include "cmut/design_explorer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <thread>

#include "cmut/errors.hpp"

namespace cmut {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

const std::vector<std::string> lumped_metric_names = {"area", "C0", "D",  "K", "M_m", "M_r", "M_ae",
                                                      "M",    "f1", "f0", "R", "Q",   "V_pi"};

double lumped_metric(const LumpedParams& p, const std::string& name) {
    if (name == "area") return p.area;
    if (name == "C0") return p.rest_capacitance;
    if (name == "D") return p.flexural_rigidity;
    if (name == "K") return p.spring_constant;
    if (name == "M_m") return p.membrane_mass;
    if (name == "M_r") return p.radiation_mass;
    if (name == "M_ae") return p.electrode_mass;
    if (name == "M") return p.total_mass;
    if (name == "f1") return p.plate_frequency;
    if (name == "f0") return p.lumped_frequency;
    if (name == "R") return p.damping;
    if (name == "Q") return p.quality_factor;
    if (name == "V_pi") return p.pull_in_voltage;
    throw ConfigError("unknown metric '" + name + "'");
}

bool is_lumped_metric(const std::string& name) {
    return std::find(lumped_metric_names.begin(), lumped_metric_names.end(), name) != lumped_metric_names.end();
}

bool needs_ogmr(const std::string& name) { return name == "eta_ogmr" || name == "eta_ogmr_closed_form"; }
bool needs_linear(const std::string& name) { return name == "eta_linear" || name == "eta_linear_no_amp"; }

double f0_of(const CmutCell& cell) { return derive_lumped(cell).lumped_frequency; }

void check_fraction(double fraction) {
    if (!std::isfinite(fraction) || fraction <= 0.0 || fraction >= 1.0) {
        throw InvalidInput("displacement fraction must be in (0, 1)");
    }
}

double closed_form_for(const OgmrSerialCircuit& circuit, int n, double delta_c) {
    const double k_const = ogmr_snr_constant(delta_c / circuit.capacitance, circuit.input_amplitude,
                                             circuit.temperature, circuit.capacitance, circuit.boltzmann_constant);
    if (const auto* fixed = std::get_if<FixedResistance>(&circuit.resistance_rule)) {
        const double z = 1.0 / (circuit.angular_frequency * circuit.capacitance);
        return ogmr_snr_closed_form(n, k_const, z / fixed->ohms, false);
    }
    return ogmr_snr_closed_form(n, k_const, 0.0, true);
}

void check_n_max(int n_max) {
    if (n_max < 1) throw InvalidInput("n_max must be >= 1");
}

}  // namespace

double SweepRow::metric(const std::string& name) const {
    for (const auto& [key, value] : metrics) {
        if (key == name) return value;
    }
    throw ConfigError("row has no metric '" + name + "'");
}

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name) {
    if (name == "sensor_count") return SweepParameter::sensor_count;
    if (name == "membrane_thickness") return SweepParameter::membrane_thickness;
    if (name == "vibrating_radius") return SweepParameter::vibrating_radius;
    if (name == "gap") return SweepParameter::gap;
    if (name == "electrode_thickness") return SweepParameter::electrode_thickness;
    if (name == "bias_voltage") return SweepParameter::bias_voltage;
    return std::nullopt;
}

std::string to_string(SweepParameter parameter) {
    switch (parameter) {
        case SweepParameter::sensor_count: return "sensor_count";
        case SweepParameter::membrane_thickness: return "membrane_thickness";
        case SweepParameter::vibrating_radius: return "vibrating_radius";
        case SweepParameter::gap: return "gap";
        case SweepParameter::electrode_thickness: return "electrode_thickness";
        case SweepParameter::bias_voltage: return "bias_voltage";
    }
    return "unknown";
}

std::string parameter_unit(SweepParameter parameter) {
    switch (parameter) {
        case SweepParameter::sensor_count: return "1";
        case SweepParameter::bias_voltage: return "V";
        default: return "m";
    }
}

const std::vector<std::string>& known_metrics() {
    static const std::vector<std::string> names = [] {
        auto all = lumped_metric_names;
        for (const char* extra : {"x_eq", "collapsed", "eta_ogmr", "eta_ogmr_closed_form", "eta_linear", "eta_linear_no_amp"}) {
            all.emplace_back(extra);
        }
        return all;
    }();
    return names;
}

void SweepSpec::validate() const {
    if (!std::isfinite(from) || !std::isfinite(to) || !(from < to)) {
        throw ConfigError("sweep: requires from < to");
    }
    if (steps < 2) throw ConfigError("sweep: steps must be >= 2");
    if (metrics.empty()) throw ConfigError("sweep: at least one metric is required");
    const auto& known = known_metrics();
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (std::find(known.begin(), known.end(), metrics[i]) == known.end()) {
            throw ConfigError("sweep: unknown metric '" + metrics[i] + "'");
        }
        if (std::find(metrics.begin(), metrics.begin() + static_cast<long>(i), metrics[i]) !=
            metrics.begin() + static_cast<long>(i)) {
            throw ConfigError("sweep: duplicate metric '" + metrics[i] + "'");
        }
    }
    if (parameter == SweepParameter::sensor_count) {
        if (from < 1.0 || std::floor(from) != from || std::floor(to) != to) {
            throw ConfigError("sweep: sensor_count bounds must be integers >= 1");
        }
    } else if (parameter == SweepParameter::bias_voltage) {
        if (from < 0.0) throw ConfigError("sweep: bias_voltage must be >= 0");
    } else if (from <= 0.0 && parameter != SweepParameter::electrode_thickness) {
        throw ConfigError("sweep: " + to_string(parameter) + " must be > 0");
    } else if (from < 0.0) {
        throw ConfigError("sweep: electrode_thickness must be >= 0");
    }
    if (!std::isfinite(bias_voltage) || bias_voltage < 0.0) {
        throw ConfigError("sweep: bias voltage must be >= 0");
    }
}

OgmrSetup build_ogmr(const CmutCell& cell, const OgmrTemplate& tmpl) {
    check_fraction(tmpl.displacement_fraction);
    const LumpedParams p = derive_lumped(cell);
    OgmrSetup setup;
    setup.circuit.sensor_count = tmpl.sensor_count;
    setup.circuit.resistance_rule = tmpl.resistance_rule;
    setup.circuit.capacitance = tmpl.capacitance.value_or(p.rest_capacitance);
    setup.circuit.input_amplitude = tmpl.input_amplitude;
    setup.circuit.angular_frequency = two_pi * tmpl.frequency.value_or(p.lumped_frequency);
    setup.circuit.temperature = cell.environment.temperature;
    setup.circuit.boltzmann_constant = cell.environment.boltzmann_constant;
    setup.circuit.validate();
    const double fr = tmpl.displacement_fraction;
    setup.delta_c = setup.circuit.capacitance * fr / (1.0 - fr);
    return setup;
}

LinearSetup build_linear(const CmutCell& cell, const LinearTemplate& tmpl) {
    check_fraction(tmpl.displacement_fraction);
    const LumpedParams p = derive_lumped(cell);
    LinearSetup setup;
    auto& c = setup.circuit;
    c.sensor_count = tmpl.sensor_count;
    c.rest_capacitance = p.rest_capacitance;
    c.gap = cell.gap;
    c.input_amplitude = tmpl.input_amplitude;
    c.angular_frequency = two_pi * tmpl.frequency.value_or(p.lumped_frequency);
    c.temperature = cell.environment.temperature;
    c.amplifier = tmpl.amplifier;
    c.bandwidth = tmpl.bandwidth;
    c.boltzmann_constant = cell.environment.boltzmann_constant;
    c.validate();
    setup.displacement = tmpl.displacement_fraction * cell.gap;
    return setup;
}

std::vector<SweepRow> sweep_sensor_count(const OgmrSerialCircuit& circuit, int n_max, double delta_c) {
    check_n_max(n_max);
    std::vector<SweepRow> rows;
    double eta_first = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        OgmrSerialCircuit c = circuit;
        c.sensor_count = n;
        const double eta = ogmr_snr(c, delta_c);
        if (n == 1) eta_first = eta;
        const double signal = std::abs(ogmr_output(c, 0.0) - ogmr_output(c, delta_c));
        SweepRow row;
        row.parameter_value = n;
        row.metrics = {
            {"eta_definition", eta},
            {"eta_ratio", eta / eta_first},
            {"eta_closed_form", closed_form_for(c, n, delta_c)},
            {"signal_v", signal},
            {"noise_v", ogmr_noise(c)},
            {"resistance_ohm", ogmr_resistance(c)},
            {"bandwidth_hz", ogmr_bandwidth(c)},
        };
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepRow> sweep_sensor_count(const LinearOgmrCircuit& circuit, int n_max, double displacement,
                                         bool include_amp_noise) {
    check_n_max(n_max);
    std::vector<SweepRow> rows;
    double eta_first = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        LinearOgmrCircuit c = circuit;
        c.sensor_count = n;
        const double eta = linear_snr(c, displacement, include_amp_noise);
        if (n == 1) eta_first = eta;
        const double signal = linear_output(c, displacement).ac;
        SweepRow row;
        row.parameter_value = n;
        row.metrics = {
            {"eta", eta},
            {"eta_ratio", eta / eta_first},
            {"eta_over_sqrt_n", eta / std::sqrt(static_cast<double>(n))},
            {"signal_v", signal},
            {"noise_v", signal / eta},
        };
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepRow> sweep_sensor_count_closed_form(int n_max, double k_const, double z_over_r, bool matched) {
    check_n_max(n_max);
    std::vector<SweepRow> rows;
    const double eta_first = ogmr_snr_closed_form(1, k_const, z_over_r, matched);
    for (int n = 1; n <= n_max; ++n) {
        const double eta = ogmr_snr_closed_form(n, k_const, z_over_r, matched);
        rows.push_back(SweepRow{static_cast<double>(n), {{"eta_closed_form", eta}, {"eta_ratio", eta / eta_first}}});
    }
    return rows;
}

double calibrate_electrode_thickness(const CmutCell& cell, double target_f0) {
    if (!std::isfinite(target_f0) || target_f0 <= 0.0) {
        throw InvalidInput("target f0 must be > 0");
    }
    CmutCell trial = cell;
    auto f0_at = [&](double t) {
        trial.electrode_thickness = t;
        return f0_of(trial);
    };
    const double bare = f0_at(0.0);
    if (std::abs(bare - target_f0) <= 1e-9 * target_f0) {
        return 0.0;
    }
    if (target_f0 > bare) {
        throw InfeasibleError("target f0 " + std::to_string(target_f0) + " Hz exceeds the bare-membrane f0 " +
                              std::to_string(bare) + " Hz; electrode mass can only lower it");
    }
    double lo = 0.0;
    double hi = cell.membrane_thickness;
    for (int i = 0; f0_at(hi) > target_f0; ++i) {
        if (i > 200) throw InfeasibleError("could not bracket the electrode thickness");
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f = f0_at(mid);
        if (std::abs(f - target_f0) <= 1e-10 * target_f0) return mid;
        if (f > target_f0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double solve_membrane_thickness(const CmutCell& cell, double target_f0, double h_lo, double h_hi) {
    if (!std::isfinite(target_f0) || target_f0 <= 0.0) throw InvalidInput("target f0 must be > 0");
    if (!std::isfinite(h_lo) || !std::isfinite(h_hi) || h_lo <= 0.0 || h_hi <= h_lo) {
        throw InvalidInput("thickness bracket requires 0 < h_lo < h_hi");
    }
    CmutCell trial = cell;
    auto f0_at = [&](double h) {
        trial.membrane_thickness = h;
        return f0_of(trial);
    };
    const double f_lo = f0_at(h_lo);
    const double f_hi = f0_at(h_hi);
    if (f_lo == target_f0) return h_lo;
    if (f_hi == target_f0) return h_hi;
    if ((f_lo - target_f0) * (f_hi - target_f0) > 0.0) {
        throw BracketError("f0 over [" + std::to_string(h_lo) + ", " + std::to_string(h_hi) + "] m spans [" +
                           std::to_string(std::min(f_lo, f_hi)) + ", " + std::to_string(std::max(f_lo, f_hi)) +
                           "] Hz, which does not contain the target " + std::to_string(target_f0) + " Hz");
    }
    const bool increasing = f_hi > f_lo;
    double lo = h_lo, hi = h_hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f = f0_at(mid);
        if ((f < target_f0) == increasing) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<SweepRow> grid_sweep(const CmutCell& cell, const SweepSpec& spec, const SweepContext& context) {
    spec.validate();
    cell.validate();
    for (const auto& m : spec.metrics) {
        if (needs_ogmr(m) && !context.ogmr) throw ConfigError("metric '" + m + "' needs a [circuit.ogmr] section");
        if (needs_linear(m) && !context.linear) {
            throw ConfigError("metric '" + m + "' needs a [circuit.linear] section");
        }
    }
    if (spec.parameter == SweepParameter::sensor_count &&
        std::none_of(spec.metrics.begin(), spec.metrics.end(),
                     [](const std::string& m) { return needs_ogmr(m) || needs_linear(m); })) {
        throw ConfigError("sensor_count sweeps need at least one eta metric");
    }

    const auto points = static_cast<std::size_t>(spec.steps);
    auto value_at = [&](std::size_t i) {
        if (i == 0) return spec.from;
        if (i + 1 == points) return spec.to;
        return spec.from + (spec.to - spec.from) * static_cast<double>(i) / static_cast<double>(points - 1);
    };

    auto evaluate = [&](std::size_t i) {
        const double value = value_at(i);
        CmutCell c = cell;
        double bias = spec.bias_voltage;
        int sensors = 0;
        switch (spec.parameter) {
            case SweepParameter::sensor_count: sensors = static_cast<int>(std::lround(value)); break;
            case SweepParameter::membrane_thickness: c.membrane_thickness = value; break;
            case SweepParameter::vibrating_radius: c.radius = value; break;
            case SweepParameter::gap: c.gap = value; break;
            case SweepParameter::electrode_thickness: c.electrode_thickness = value; break;
            case SweepParameter::bias_voltage: bias = value; break;
        }
        const LumpedParams p = derive_lumped(c);
        std::optional<EquilibriumResult> equilibrium;
        SweepRow row;
        row.parameter_value = value;
        for (const auto& m : spec.metrics) {
            double v = 0.0;
            if (is_lumped_metric(m)) {
                v = lumped_metric(p, m);
            } else if (m == "x_eq" || m == "collapsed") {
                if (!equilibrium) equilibrium = static_equilibrium(c, bias);
                const bool collapsed = is_collapsed(*equilibrium);
                if (m == "collapsed") {
                    v = collapsed ? 1.0 : 0.0;
                } else {
                    v = collapsed ? c.gap : std::get<Stable>(*equilibrium).displacement;
                }
            } else if (needs_ogmr(m)) {
                OgmrTemplate tmpl = *context.ogmr;
                if (sensors > 0) tmpl.sensor_count = sensors;
                const OgmrSetup setup = build_ogmr(c, tmpl);
                v = (m == "eta_ogmr") ? ogmr_snr(setup.circuit, setup.delta_c)
                                      : closed_form_for(setup.circuit, setup.circuit.sensor_count, setup.delta_c);
            } else {
                LinearTemplate tmpl = *context.linear;
                if (sensors > 0) tmpl.sensor_count = sensors;
                const LinearSetup setup = build_linear(c, tmpl);
                v = linear_snr(setup.circuit, setup.displacement, m == "eta_linear");
            }
            row.metrics.emplace_back(m, v);
        }
        return row;
    };

    std::vector<SweepRow> rows(points);
    std::vector<std::exception_ptr> errors(points);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points; i = next++) {
            try {
                rows[i] = evaluate(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(points, std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

}  // namespace cmut
