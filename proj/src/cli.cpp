#include "cmut/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "cmut/circuits.hpp"
#include "cmut/design_explorer.hpp"
#include "cmut/design_file.hpp"
#include "cmut/errors.hpp"
#include "cmut/model_core.hpp"

namespace cmut::cli {

namespace {

using nlohmann::json;

std::string sci(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
    return buf;
}

json table_json(const Table& table) {
    json columns = json::array();
    for (const auto& c : table.columns) columns.push_back({{"name", c.name}, {"unit", c.unit}});
    return {{"columns", columns}, {"rows", table.rows}};
}

std::string metric_unit(const std::string& name) {
    static const std::map<std::string, std::string> units = {
        {"area", "m^2"}, {"C0", "F"},          {"D", "N*m"},     {"K", "N/m"},       {"M_m", "kg"},
        {"M_r", "kg"},   {"M_ae", "kg"},       {"M", "kg"},      {"f1", "Hz"},       {"f0", "Hz"},
        {"R", "kg/s"},   {"Q", "1"},           {"V_pi", "V"},    {"x_eq", "m"},      {"collapsed", "1"},
        {"signal_v", "V"}, {"noise_v", "V"},   {"resistance_ohm", "ohm"}, {"bandwidth_hz", "Hz"},
    };
    const auto it = units.find(name);
    return it == units.end() ? "1" : it->second;
}

Table rows_to_table(const std::string& parameter, const std::string& unit, const std::vector<SweepRow>& rows) {
    Table table;
    table.columns.push_back({parameter, unit});
    if (!rows.empty()) {
        for (const auto& [name, value] : rows.front().metrics) table.columns.push_back({name, metric_unit(name)});
    }
    for (const auto& row : rows) {
        std::vector<double> values{row.parameter_value};
        for (const auto& [name, value] : row.metrics) values.push_back(value);
        table.rows.push_back(std::move(values));
    }
    return table;
}

struct Output {
    std::string format = "csv";
    std::string path;
};

void add_output_options(CLI::App* cmd, Output& o, const std::string& default_format) {
    o.format = default_format;
    cmd->add_option("--format", o.format, "Output serialization")
        ->check(CLI::IsMember({"text", "csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", o.path, "Write the result to this file instead of stdout");
}

int emit(const Output& o, const std::string& content, std::ostream& out, std::ostream& err) {
    if (o.path.empty()) {
        out << content;
        return exit_ok;
    }
    std::ofstream file(o.path, std::ios::binary | std::ios::trunc);
    if (!file || !(file << content) || !file.flush()) {
        err << "error: cannot write '" << o.path << "'\n";
        return exit_failure;
    }
    return exit_ok;
}

std::string render_table(const Table& table, const std::string& format) {
    if (format == "json") return table_json(table).dump(2) + "\n";
    return to_csv(table);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

double parse_double(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw InvalidInput("drive: " + what + " expects a finite number, got '" + text + "'");
    }
    return v;
}

}  // namespace

std::string to_csv(const Table& table) {
    std::string csv;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) csv += ',';
        csv += table.columns[i].name + "(" + table.columns[i].unit + ")";
    }
    csv += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) csv += ',';
            csv += sci(row[i], 9);
        }
        csv += '\n';
    }
    return csv;
}

std::string to_json(const Table& table) { return table_json(table).dump(2) + "\n"; }

DriveSignal parse_drive_spec(const std::string& spec) {
    if (spec == "zero") return ZeroDrive{};
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw InvalidInput("drive: expected 'zero', 'dc:V', 'sine:...' or 'pulse:...', got '" + spec + "'");
    }
    const std::string kind = spec.substr(0, colon);
    const std::string body = spec.substr(colon + 1);
    if (kind == "dc") {
        return ConstantDrive{parse_double(body, "dc")};
    }

    std::map<std::string, double> fields;
    for (const auto& part : split(body, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw InvalidInput("drive: expected key=value, got '" + part + "'");
        const std::string key = part.substr(0, eq);
        if (fields.count(key)) throw InvalidInput("drive: duplicate field '" + key + "'");
        fields[key] = parse_double(part.substr(eq + 1), key);
    }
    auto take = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
        const auto it = fields.find(key);
        if (it == fields.end()) {
            if (fallback) return *fallback;
            throw InvalidInput("drive: " + kind + " needs field '" + key + "'");
        }
        const double v = it->second;
        fields.erase(it);
        return v;
    };

    DriveSignal drive;
    if (kind == "sine") {
        BiasedSineDrive s;
        s.dc = take("dc", 0.0);
        s.ac = take("ac");
        s.frequency = take("f");
        s.phase = take("phase", 0.0);
        drive = s;
    } else if (kind == "pulse") {
        PulseDrive p;
        p.amplitude = take("amp");
        p.start = take("start", 0.0);
        p.width = take("width");
        drive = p;
    } else {
        throw InvalidInput("drive: unknown kind '" + kind + "'");
    }
    if (!fields.empty()) throw InvalidInput("drive: unknown field '" + fields.begin()->first + "'");
    validate_drive(drive);
    return drive;
}

namespace {

constexpr const char* drive_help =
    "Drive waveform: zero | dc:V | sine:dc=V,ac=V,f=Hz[,phase=rad] | pulse:amp=V,start=s,width=s";

int run_derive(const DesignFile& design, const Output& o, std::ostream& out, std::ostream& err) {
    const LumpedParams p = derive_lumped(design.cell);
    const std::vector<std::tuple<std::string, double, std::string>> fields = {
        {"A", p.area, "m^2"},
        {"C0", p.rest_capacitance, "F"},
        {"D", p.flexural_rigidity, "N*m"},
        {"K", p.spring_constant, "N/m"},
        {"M_m", p.membrane_mass, "kg"},
        {"M_r", p.radiation_mass, "kg"},
        {"M_ae", p.electrode_mass, "kg"},
        {"M", p.total_mass, "kg"},
        {"f1", p.plate_frequency, "Hz"},
        {"f0", p.lumped_frequency, "Hz"},
        {"R", p.damping, "kg/s"},
        {"Q", p.quality_factor, "1"},
        {"V_pi", p.pull_in_voltage, "V"},
    };
    std::string content;
    if (o.format == "json") {
        json j = json::object();
        for (const auto& [name, value, unit] : fields) j[name] = {{"value", value}, {"unit", unit}};
        content = j.dump(2) + "\n";
    } else if (o.format == "csv") {
        content = "name,value,unit\n";
        for (const auto& [name, value, unit] : fields) content += name + "," + sci(value, 9) + "," + unit + "\n";
    } else {
        for (const auto& [name, value, unit] : fields) content += name + " = " + sci(value, 7) + " " + unit + "\n";
    }
    return emit(o, content, out, err);
}

int run_equilibrium(const DesignFile& design, double voltage, const Output& o, std::ostream& out,
                    std::ostream& err) {
    if (!std::isfinite(voltage) || voltage < 0.0) throw InvalidInput("--voltage must be >= 0");
    const auto result = static_equilibrium(design.cell, voltage);
    const double v_pi = derive_lumped(design.cell).pull_in_voltage;
    const double d = design.cell.gap;
    std::string content;
    if (o.format == "json") {
        json j = {{"voltage", voltage}, {"pull_in_voltage", v_pi}};
        if (is_collapsed(result)) {
            j["state"] = "collapsed";
        } else {
            const double x = std::get<Stable>(result).displacement;
            j["state"] = "stable";
            j["displacement"] = x;
            j["x_over_d"] = x / d;
        }
        content = j.dump(2) + "\n";
    } else if (o.format == "csv") {
        content = "voltage(V),state,displacement(m)\n" + sci(voltage, 9) + ",";
        content += is_collapsed(result) ? "COLLAPSED,\n"
                                        : "STABLE," + sci(std::get<Stable>(result).displacement, 9) + "\n";
    } else if (is_collapsed(result)) {
        content = "COLLAPSED (V = " + sci(voltage, 6) + " V exceeds V_pi = " + sci(v_pi, 6) + " V)\n";
    } else {
        const double x = std::get<Stable>(result).displacement;
        content = "STABLE x = " + sci(x, 7) + " m (x/d = " + sci(x / d, 7) + ")\n";
    }
    return emit(o, content, out, err);
}

struct SimulateArgs {
    std::string drive;
    std::optional<double> pressure;
    double pressure_ac = 0.0;
    double pressure_frequency = 0.0;
    std::optional<double> dt;
    std::optional<double> duration;
};

int run_simulate(const DesignFile& design, const SimulateArgs& a, const Output& o, std::ostream& out,
                 std::ostream& err) {
    const DriveSignal drive = parse_drive_spec(a.drive);
    SimulationDefaults sim = design.simulation;
    if (a.duration) sim.duration = *a.duration;
    if (a.dt) sim.dt = *a.dt;
    if (a.pressure) sim.pressure = *a.pressure;
    SimConfig config = sim.resolve(design.cell);
    config.pressure_amplitude = a.pressure_ac;
    config.pressure_frequency = a.pressure_frequency;
    config.validate();

    const TimeSeries ts = simulate(design.cell, drive, config);
    Table table;
    table.columns = {{"t", "s"}, {"w", "m"}, {"v", "m/s"}, {"F_e", "N"}, {"C", "F"}};
    table.rows.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        table.rows.push_back(
            {ts.times[i], ts.displacement[i], ts.velocity[i], ts.electrostatic_force[i], ts.capacitance[i]});
    }
    std::string content;
    if (o.format == "json") {
        json j = table_json(table);
        j["collapse_time"] = ts.collapse ? json(ts.collapse->time) : json(nullptr);
        content = j.dump(2) + "\n";
    } else {
        content = to_csv(table);
    }
    const int code = emit(o, content, out, err);
    if (code == exit_ok && ts.collapse) {
        (o.path.empty() ? err : out) << "collapse at t = " << sci(ts.collapse->time, 6) << " s\n";
    }
    return code;
}

int run_freq(const DesignFile& design, double f_min, double f_max, int points, const Output& o, std::ostream& out,
             std::ostream& err) {
    if (!(f_min > 0.0) || !(f_max > f_min) || !std::isfinite(f_max)) {
        throw InvalidInput("freq: requires 0 < --min < --max");
    }
    if (points < 2) throw InvalidInput("freq: --points must be >= 2");
    Table table;
    table.columns = {{"f", "Hz"}, {"magnitude", "m/N"}, {"phase", "rad"}};
    for (int i = 0; i < points; ++i) {
        const double f = (i == points - 1) ? f_max : f_min + (f_max - f_min) * i / (points - 1);
        const auto h = mechanical_response(design.cell, f);
        table.rows.push_back({f, std::abs(h), std::arg(h)});
    }
    return emit(o, render_table(table, o.format), out, err);
}

struct SnrArgs {
    std::string circuit;
    int n_max = 8;
    bool no_amp_noise = false;
    std::optional<double> k_const;
};

int run_snr(const DesignFile& design, const SnrArgs& a, const Output& o, std::ostream& out, std::ostream& err) {
    if (a.n_max < 1) throw InvalidInput("snr: --n-max must be >= 1");
    std::vector<SweepRow> rows;
    if (a.circuit == "linear") {
        if (!design.linear) throw ConfigError("snr --circuit linear needs a [circuit.linear] section");
        const LinearSetup setup = build_linear(design.cell, *design.linear);
        rows = sweep_sensor_count(setup.circuit, a.n_max, setup.displacement, !a.no_amp_noise);
    } else {
        if (!design.ogmr) throw ConfigError("snr --circuit " + a.circuit + " needs a [circuit.ogmr] section");
        const OgmrSetup setup = build_ogmr(design.cell, *design.ogmr);
        if (a.circuit == "ogmr") {
            rows = sweep_sensor_count(setup.circuit, a.n_max, setup.delta_c);
        } else {
            const auto& c = setup.circuit;
            const double k_const =
                a.k_const.value_or(ogmr_snr_constant(setup.delta_c / c.capacitance, c.input_amplitude, c.temperature,
                                                     c.capacitance, c.boltzmann_constant));
            const auto* fixed = std::get_if<FixedResistance>(&c.resistance_rule);
            const double z_over_r = fixed ? 1.0 / (c.angular_frequency * c.capacitance * fixed->ohms) : 0.0;
            rows = sweep_sensor_count_closed_form(a.n_max, k_const, z_over_r, fixed == nullptr);
        }
    }
    return emit(o, render_table(rows_to_table("n", "1", rows), o.format), out, err);
}

struct SweepArgs {
    std::string param;
    double from = 0.0;
    double to = 0.0;
    int steps = 2;
    std::vector<std::string> metrics;
    double voltage = 0.0;
};

int run_sweep(const DesignFile& design, const SweepArgs& a, const Output& o, std::ostream& out, std::ostream& err) {
    const auto parameter = parse_sweep_parameter(a.param);
    if (!parameter) throw ConfigError("sweep: unknown parameter '" + a.param + "'");
    SweepSpec spec;
    spec.parameter = *parameter;
    spec.from = a.from;
    spec.to = a.to;
    spec.steps = a.steps;
    spec.metrics = a.metrics;
    spec.bias_voltage = a.voltage;
    const auto rows = grid_sweep(design.cell, spec, SweepContext{design.ogmr, design.linear});
    return emit(o, render_table(rows_to_table(a.param, parameter_unit(*parameter), rows), o.format), out, err);
}

int run_calibrate(const DesignFile& design, double target, const std::vector<double>& bracket, const Output& o,
                  std::ostream& out, std::ostream& err) {
    std::string name = "electrode_thickness";
    double value = 0.0;
    if (bracket.empty()) {
        value = calibrate_electrode_thickness(design.cell, target);
    } else {
        name = "membrane_thickness";
        value = solve_membrane_thickness(design.cell, target, bracket.at(0), bracket.at(1));
    }
    CmutCell solved = design.cell;
    (bracket.empty() ? solved.electrode_thickness : solved.membrane_thickness) = value;
    const double f0 = derive_lumped(solved).lumped_frequency;
    std::string content;
    if (o.format == "json") {
        content = json{{name, value}, {"f0", f0}, {"target_f0", target}}.dump(2) + "\n";
    } else if (o.format == "csv") {
        content = name + "(m),f0(Hz)\n" + sci(value, 9) + "," + sci(f0, 9) + "\n";
    } else {
        content = name + " = " + sci(value, 7) + " m (f0 = " + sci(f0, 7) + " Hz)\n";
    }
    return emit(o, content, out, err);
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lumped-parameter CMUT model: derived quantities, pull-in, dynamics, readout SNR"};
    app.name("cmut");
    app.require_subcommand(1);

    std::string design_path;
    Output output;

    auto* derive = app.add_subcommand("derive", "Print the lumped parameters of the cell");
    derive->add_option("design", design_path, "Design file")->required();
    Output derive_out;
    add_output_options(derive, derive_out, "text");

    auto* equilibrium = app.add_subcommand("equilibrium", "Static equilibrium at a DC voltage");
    equilibrium->add_option("design", design_path, "Design file")->required();
    double voltage = 0.0;
    equilibrium->add_option("--voltage", voltage, "DC bias, V")->required();
    Output equilibrium_out;
    add_output_options(equilibrium, equilibrium_out, "text");

    auto* sim = app.add_subcommand("simulate", "Integrate the membrane ODE");
    sim->add_option("design", design_path, "Design file")->required();
    SimulateArgs sim_args;
    sim->add_option("--drive", sim_args.drive, drive_help)->required();
    sim->add_option("--pressure", sim_args.pressure, "Static received pressure, Pa");
    sim->add_option("--pressure-ac", sim_args.pressure_ac, "Sinusoidal pressure amplitude, Pa");
    sim->add_option("--pressure-freq", sim_args.pressure_frequency, "Sinusoidal pressure frequency, Hz");
    sim->add_option("--dt", sim_args.dt, "Time step, s (default 1/(200 f0))");
    sim->add_option("--duration", sim_args.duration, "Simulated time, s");
    Output sim_out;
    add_output_options(sim, sim_out, "csv");

    auto* freq = app.add_subcommand("freq", "Small-signal mechanical compliance |H| and phase");
    freq->add_option("design", design_path, "Design file")->required();
    double f_min = 0.0, f_max = 0.0;
    int points = 0;
    freq->add_option("--min", f_min, "Lowest frequency, Hz")->required();
    freq->add_option("--max", f_max, "Highest frequency, Hz")->required();
    freq->add_option("--points", points, "Number of points (endpoint inclusive)")->required();
    Output freq_out;
    add_output_options(freq, freq_out, "csv");

    auto* snr = app.add_subcommand("snr", "Signal-to-noise ratio versus sensor count");
    snr->add_option("design", design_path, "Design file")->required();
    SnrArgs snr_args;
    snr->add_option("--circuit", snr_args.circuit, "ogmr (definition), ogmr-paper (closed form) or linear")
        ->required()
        ->check(CLI::IsMember({"ogmr", "ogmr-paper", "linear"}));
    snr->add_option("--n-max", snr_args.n_max, "Largest sensor count")->required();
    snr->add_flag("--no-amp-noise", snr_args.no_amp_noise, "Drop op-amp noise terms (linear circuit)");
    snr->add_option("--k-const", snr_args.k_const, "Explicit closed-form constant K (ogmr-paper)");
    Output snr_out;
    add_output_options(snr, snr_out, "csv");

    auto* sweep = app.add_subcommand("sweep", "Sweep one design parameter and tabulate metrics");
    sweep->add_option("design", design_path, "Design file")->required();
    SweepArgs sweep_args;
    sweep->add_option("--param", sweep_args.param,
                      "sensor_count | membrane_thickness | vibrating_radius | gap | electrode_thickness | "
                      "bias_voltage (SI units)")
        ->required();
    sweep->add_option("--from", sweep_args.from, "First value")->required();
    sweep->add_option("--to", sweep_args.to, "Last value")->required();
    sweep->add_option("--steps", sweep_args.steps, "Grid points (>= 2)")->required();
    sweep->add_option("--metric", sweep_args.metrics, "Metric names (repeatable or comma separated)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--voltage", sweep_args.voltage, "Bias voltage for x_eq / collapsed, V");
    Output sweep_out;
    add_output_options(sweep, sweep_out, "csv");

    auto* calibrate = app.add_subcommand("calibrate", "Solve electrode (or membrane) thickness for a target f0");
    calibrate->add_option("design", design_path, "Design file")->required();
    double target = 0.0;
    calibrate->add_option("--target-f0", target, "Target lumped resonance, Hz")->required();
    std::vector<double> bracket;
    calibrate->add_option("--membrane-bracket", bracket, "Solve membrane thickness in [LO, HI] m instead")
        ->expected(2);
    Output calibrate_out;
    add_output_options(calibrate, calibrate_out, "text");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        const DesignFile design = load_design_file(design_path);
        if (*derive) return run_derive(design, derive_out, out, err);
        if (*equilibrium) return run_equilibrium(design, voltage, equilibrium_out, out, err);
        if (*sim) return run_simulate(design, sim_args, sim_out, out, err);
        if (*freq) return run_freq(design, f_min, f_max, points, freq_out, out, err);
        if (*snr) return run_snr(design, snr_args, snr_out, out, err);
        if (*sweep) return run_sweep(design, sweep_args, sweep_out, out, err);
        if (*calibrate) return run_calibrate(design, target, bracket, calibrate_out, out, err);
    } catch (const ParseError& e) {
        err << "error: " << design_path << ": " << e.what() << "\n";
        return exit_usage;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace cmut::cli
