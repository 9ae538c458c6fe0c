#include "cmut/design_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace cmut {

namespace {

using Kind = ParseError::Kind;

struct Entry {
    std::string value;
    int line = 0;
    int key_column = 0;
    int value_column = 0;
};

struct Section {
    int line = 0;
    std::vector<std::pair<std::string, Entry>> entries;
};

enum class Range { positive, non_negative, any, fraction, poisson, at_least_one };

struct NumberKey {
    const char* key;
    double scale;
    Range range;
    std::function<void(double)> set;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    for (char ch : s) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_' || ch == '.';
        if (!ok) return false;
    }
    return true;
}

std::map<std::string, Section> tokenize(std::string_view text, std::vector<std::string>& order) {
    std::map<std::string, Section> sections;
    Section* current = nullptr;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (const auto hash = raw.find_first_of("#;"); hash != std::string_view::npos) {
            raw = raw.substr(0, hash);
        }
        const std::string_view line = trim(raw);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const int indent = static_cast<int>(raw.find_first_not_of(" \t\r")) + 1;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(Kind::syntax, line_no, indent + static_cast<int>(line.size()),
                                 "expected ']' to close section header");
            }
            const std::string name(trim(line.substr(1, line.size() - 2)));
            if (!valid_identifier(name)) {
                throw ParseError(Kind::syntax, line_no, indent + 1, "invalid section name '" + name + "'");
            }
            if (sections.count(name) != 0) {
                throw ParseError(Kind::duplicate, line_no, indent, "duplicate section [" + name + "]");
            }
            current = &sections[name];
            current->line = line_no;
            order.push_back(name);
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(Kind::syntax, line_no, indent + static_cast<int>(line.size()),
                                 "expected 'key = value'");
            }
            const std::string key(trim(line.substr(0, eq)));
            if (!valid_identifier(key)) {
                throw ParseError(Kind::syntax, line_no, indent, "invalid key '" + key + "'");
            }
            if (current == nullptr) {
                throw ParseError(Kind::syntax, line_no, indent, "key '" + key + "' appears before any section");
            }
            const std::string_view after = line.substr(eq + 1);
            const std::string value(trim(after));
            const int value_column =
                indent + static_cast<int>(eq) + 1 + static_cast<int>(after.find_first_not_of(" \t"));
            if (value.empty()) {
                throw ParseError(Kind::syntax, line_no, indent + static_cast<int>(eq) + 1,
                                 "missing value for key '" + key + "'");
            }
            for (const auto& [existing, entry] : current->entries) {
                if (existing == key) {
                    throw ParseError(Kind::duplicate, line_no, indent, "duplicate key '" + key + "'");
                }
            }
            current->entries.emplace_back(key, Entry{value, line_no, indent, value_column});
        }
        if (end == text.size()) break;
    }
    return sections;
}

double parse_number(const std::string& key, const Entry& entry) {
    double value = 0.0;
    const char* first = entry.value.data();
    const char* last = first + entry.value.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError(Kind::syntax, entry.line, entry.value_column,
                         "key '" + key + "': expected a finite number, got '" + entry.value + "'");
    }
    return value;
}

void check_range(const std::string& key, const Entry& entry, double value, Range range) {
    bool ok = true;
    const char* what = "";
    switch (range) {
        case Range::positive: ok = value > 0.0; what = "> 0"; break;
        case Range::non_negative: ok = value >= 0.0; what = ">= 0"; break;
        case Range::any: break;
        case Range::fraction: ok = value > 0.0 && value < 1.0; what = "in (0, 1)"; break;
        case Range::poisson: ok = value >= 0.0 && value < 0.5; what = "in [0, 0.5)"; break;
        case Range::at_least_one: ok = value >= 1.0; what = ">= 1"; break;
    }
    if (!ok) {
        throw ParseError(Kind::out_of_range, entry.line, entry.value_column,
                         "key '" + key + "' = " + entry.value + " is out of range (must be " + what + ")");
    }
}

class SectionReader {
public:
    SectionReader(std::string name, const Section& section) : name_(std::move(name)), section_(section) {}

    const Entry* find(const std::string& key) {
        for (const auto& [k, e] : section_.entries) {
            if (k == key) {
                used_.push_back(k);
                return &e;
            }
        }
        return nullptr;
    }

    void numbers(const std::vector<NumberKey>& keys) {
        for (const auto& spec : keys) {
            if (const Entry* e = find(spec.key)) {
                const double raw = parse_number(spec.key, *e);
                check_range(spec.key, *e, raw, spec.range);
                spec.set(raw * spec.scale);
            }
        }
    }

    double required_number(const std::string& key, double scale, Range range) {
        const Entry* e = find(key);
        if (e == nullptr) {
            throw ParseError(Kind::missing_key, section_.line, 1,
                             "section [" + name_ + "] is missing required key '" + key + "'");
        }
        const double raw = parse_number(key, *e);
        check_range(key, *e, raw, range);
        return raw * scale;
    }

    int integer(const std::string& key, int fallback) {
        const Entry* e = find(key);
        if (e == nullptr) return fallback;
        int value = 0;
        const char* first = e->value.data();
        const char* last = first + e->value.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            throw ParseError(Kind::syntax, e->line, e->value_column,
                             "key '" + key + "': expected an integer, got '" + e->value + "'");
        }
        if (value < 1) {
            throw ParseError(Kind::out_of_range, e->line, e->value_column,
                             "key '" + key + "' = " + e->value + " is out of range (must be >= 1)");
        }
        return value;
    }

    void reject_unknown() const {
        for (const auto& [k, e] : section_.entries) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
                throw ParseError(Kind::unknown_key, e.line, e.key_column,
                                 "unknown key '" + k + "' in section [" + name_ + "]");
            }
        }
    }

    int line() const { return section_.line; }

private:
    std::string name_;
    const Section& section_;
    std::vector<std::string> used_;
};

void read_material(SectionReader& reader, Material& m) {
    if (const Entry* e = reader.find("material")) m.name = e->value;
    reader.numbers({
        {"youngs_modulus_gpa", 1e9, Range::positive, [&](double v) { m.youngs_modulus = v; }},
        {"poisson_ratio", 1.0, Range::poisson, [&](double v) { m.poisson_ratio = v; }},
        {"density_kgm3", 1.0, Range::positive, [&](double v) { m.density = v; }},
    });
}

// Shortest decimal text t with parse(t) * scale == si, so files re-parse bit-exactly.
std::string format_scaled(double si, double scale) {
    double u = si / scale;
    char buf[64];
    for (int attempt = 0; attempt < 9; ++attempt) {
        const int step = (attempt + 1) / 2 * ((attempt % 2 == 1) ? 1 : -1);
        double candidate = u;
        for (int k = 0; k < std::abs(step); ++k) {
            candidate = std::nextafter(candidate, step > 0 ? INFINITY : -INFINITY);
        }
        const auto res = std::to_chars(buf, buf + sizeof buf, candidate);
        const std::string text(buf, res.ptr);
        double back = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        if (back * scale == si) return text;
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, u);
    return std::string(buf, res.ptr);
}

}  // namespace

ParseError::ParseError(Kind kind, int line, int column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

SimConfig SimulationDefaults::resolve(const CmutCell& cell) const {
    SimConfig config = SimConfig::for_cell(cell, duration);
    if (dt) config.dt = *dt;
    config.contact_margin = contact_margin;
    config.external_pressure = pressure;
    return config;
}

DesignFile parse_design_file(std::string_view text) {
    std::vector<std::string> order;
    const auto sections = tokenize(text, order);
    static const std::vector<std::string> known = {"geometry",      "membrane",       "electrode", "environment",
                                                   "circuit.ogmr", "circuit.linear", "simulation"};
    for (const auto& name : order) {
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ParseError(Kind::unknown_key, sections.at(name).line, 1, "unknown section [" + name + "]");
        }
    }
    for (const char* required : {"geometry", "membrane"}) {
        if (sections.count(required) == 0) {
            throw ParseError(Kind::missing_section, 1, 1,
                             std::string("missing required section [") + required + "]");
        }
    }

    DesignFile design;
    CmutCell& cell = design.cell;
    cell.electrode_thickness = 2.07e-6;

    {
        SectionReader r("geometry", sections.at("geometry"));
        cell.radius = r.required_number("radius_um", 1e-6, Range::positive);
        cell.gap = r.required_number("gap_um", 1e-6, Range::positive);
        r.reject_unknown();
    }
    {
        SectionReader r("membrane", sections.at("membrane"));
        cell.membrane_thickness = r.required_number("thickness_um", 1e-6, Range::positive);
        read_material(r, cell.membrane);
        r.reject_unknown();
    }
    if (auto it = sections.find("electrode"); it != sections.end()) {
        SectionReader r("electrode", it->second);
        r.numbers({{"thickness_um", 1e-6, Range::non_negative, [&](double v) { cell.electrode_thickness = v; }}});
        read_material(r, cell.electrode);
        r.reject_unknown();
    }
    if (auto it = sections.find("environment"); it != sections.end()) {
        SectionReader r("environment", it->second);
        auto& env = cell.environment;
        r.numbers({
            {"temperature_k", 1.0, Range::positive, [&](double v) { env.temperature = v; }},
            {"air_density_kgm3", 1.0, Range::positive, [&](double v) { env.air_density = v; }},
            {"sound_speed_ms", 1.0, Range::positive, [&](double v) { env.sound_speed = v; }},
            {"permittivity_fm", 1.0, Range::positive, [&](double v) { env.vacuum_permittivity = v; }},
            {"boltzmann_jk", 1.0, Range::positive, [&](double v) { env.boltzmann_constant = v; }},
            {"damping_multiplier", 1.0, Range::at_least_one, [&](double v) { cell.damping_multiplier = v; }},
        });
        r.reject_unknown();
    }
    if (auto it = sections.find("circuit.ogmr"); it != sections.end()) {
        SectionReader r("circuit.ogmr", it->second);
        OgmrTemplate t;
        t.sensor_count = r.integer("n", 1);
        const Entry* rule = r.find("resistance");
        const Entry* ohms = r.find("resistance_ohm");
        if (rule != nullptr && ohms != nullptr) {
            throw ParseError(Kind::duplicate, ohms->line, ohms->key_column,
                             "give either 'resistance = matched' or 'resistance_ohm', not both");
        }
        if (rule != nullptr) {
            if (rule->value != "matched") {
                throw ParseError(Kind::syntax, rule->line, rule->value_column,
                                 "key 'resistance': expected 'matched', got '" + rule->value + "'");
            }
            t.resistance_rule = MatchedResistance{};
        } else if (ohms != nullptr) {
            const double v = parse_number("resistance_ohm", *ohms);
            check_range("resistance_ohm", *ohms, v, Range::positive);
            t.resistance_rule = FixedResistance{v};
        }
        r.numbers({
            {"capacitance_pf", 1e-12, Range::positive, [&](double v) { t.capacitance = v; }},
            {"vin_v", 1.0, Range::positive, [&](double v) { t.input_amplitude = v; }},
            {"frequency_hz", 1.0, Range::positive, [&](double v) { t.frequency = v; }},
            {"displacement_fraction", 1.0, Range::fraction, [&](double v) { t.displacement_fraction = v; }},
        });
        r.reject_unknown();
        design.ogmr = t;
    }
    if (auto it = sections.find("circuit.linear"); it != sections.end()) {
        SectionReader r("circuit.linear", it->second);
        LinearTemplate t;
        t.sensor_count = r.integer("n", 1);
        t.bandwidth = r.required_number("bandwidth_hz", 1.0, Range::positive);
        r.numbers({
            {"vin_v", 1.0, Range::positive, [&](double v) { t.input_amplitude = v; }},
            {"frequency_hz", 1.0, Range::positive, [&](double v) { t.frequency = v; }},
            {"current_noise_pa", 1e-12, Range::non_negative, [&](double v) { t.amplifier.current_noise_density = v; }},
            {"voltage_noise_nv", 1e-9, Range::non_negative, [&](double v) { t.amplifier.voltage_noise_density = v; }},
            {"displacement_fraction", 1.0, Range::fraction, [&](double v) { t.displacement_fraction = v; }},
        });
        r.reject_unknown();
        design.linear = t;
    }
    if (auto it = sections.find("simulation"); it != sections.end()) {
        SectionReader r("simulation", it->second);
        auto& sim = design.simulation;
        r.numbers({
            {"dt_s", 1.0, Range::positive, [&](double v) { sim.dt = v; }},
            {"duration_s", 1.0, Range::positive, [&](double v) { sim.duration = v; }},
            {"contact_margin", 1.0, Range::fraction, [&](double v) { sim.contact_margin = v; }},
            {"pressure_pa", 1.0, Range::any, [&](double v) { sim.pressure = v; }},
        });
        r.reject_unknown();
        if (sim.dt && *sim.dt > sim.duration) {
            throw ParseError(Kind::out_of_range, r.line(), 1, "key 'dt_s' must not exceed 'duration_s'");
        }
    }

    try {
        cell.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(Kind::out_of_range, 1, 1, e.what());
    }
    return design;
}

DesignFile load_design_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(Kind::missing_section, 0, 0, "cannot open design file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_design_file(buffer.str());
}

std::string write_design_file(const DesignFile& design) {
    const CmutCell& c = design.cell;
    std::ostringstream out;
    auto kv = [&](const char* key, double si, double scale) {
        out << key << " = " << format_scaled(si, scale) << '\n';
    };
    auto material = [&](const Material& m) {
        if (!m.name.empty()) out << "material = " << m.name << '\n';
        kv("youngs_modulus_gpa", m.youngs_modulus, 1e9);
        kv("poisson_ratio", m.poisson_ratio, 1.0);
        kv("density_kgm3", m.density, 1.0);
    };

    out << "[geometry]\n";
    kv("radius_um", c.radius, 1e-6);
    kv("gap_um", c.gap, 1e-6);
    out << "\n[membrane]\n";
    kv("thickness_um", c.membrane_thickness, 1e-6);
    material(c.membrane);
    out << "\n[electrode]\n";
    kv("thickness_um", c.electrode_thickness, 1e-6);
    material(c.electrode);
    out << "\n[environment]\n";
    kv("temperature_k", c.environment.temperature, 1.0);
    kv("air_density_kgm3", c.environment.air_density, 1.0);
    kv("sound_speed_ms", c.environment.sound_speed, 1.0);
    kv("permittivity_fm", c.environment.vacuum_permittivity, 1.0);
    kv("boltzmann_jk", c.environment.boltzmann_constant, 1.0);
    kv("damping_multiplier", c.damping_multiplier, 1.0);

    if (design.ogmr) {
        const auto& t = *design.ogmr;
        out << "\n[circuit.ogmr]\n";
        out << "n = " << t.sensor_count << '\n';
        if (const auto* fixed = std::get_if<FixedResistance>(&t.resistance_rule)) {
            kv("resistance_ohm", fixed->ohms, 1.0);
        } else {
            out << "resistance = matched\n";
        }
        if (t.capacitance) kv("capacitance_pf", *t.capacitance, 1e-12);
        kv("vin_v", t.input_amplitude, 1.0);
        if (t.frequency) kv("frequency_hz", *t.frequency, 1.0);
        kv("displacement_fraction", t.displacement_fraction, 1.0);
    }
    if (design.linear) {
        const auto& t = *design.linear;
        out << "\n[circuit.linear]\n";
        out << "n = " << t.sensor_count << '\n';
        kv("vin_v", t.input_amplitude, 1.0);
        if (t.frequency) kv("frequency_hz", *t.frequency, 1.0);
        kv("bandwidth_hz", t.bandwidth, 1.0);
        kv("current_noise_pa", t.amplifier.current_noise_density, 1e-12);
        kv("voltage_noise_nv", t.amplifier.voltage_noise_density, 1e-9);
        kv("displacement_fraction", t.displacement_fraction, 1.0);
    }
    const auto& sim = design.simulation;
    out << "\n[simulation]\n";
    if (sim.dt) kv("dt_s", *sim.dt, 1.0);
    kv("duration_s", sim.duration, 1.0);
    kv("contact_margin", sim.contact_margin, 1.0);
    kv("pressure_pa", sim.pressure, 1.0);
    return out.str();
}

}  // namespace cmut
