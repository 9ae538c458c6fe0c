#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cmut/design_explorer.hpp"
#include "cmut/dynamics.hpp"
#include "cmut/errors.hpp"
#include "cmut/model_core.hpp"

namespace cmut {

/// Simulation settings from the [simulation] section. dt falls back to 1/(200 f0).
struct SimulationDefaults {
    std::optional<double> dt;       // s
    double duration = 20e-6;        // s
    double contact_margin = 0.999;
    double pressure = 0.0;          // Pa

    SimConfig resolve(const CmutCell& cell) const;
    bool operator==(const SimulationDefaults&) const = default;
};

struct DesignFile {
    CmutCell cell;
    std::optional<OgmrTemplate> ogmr;
    std::optional<LinearTemplate> linear;
    SimulationDefaults simulation;

    bool operator==(const DesignFile&) const = default;
};

class ParseError : public Error {
public:
    enum class Kind { syntax, unknown_key, out_of_range, missing_section, missing_key, duplicate };

    ParseError(Kind kind, int line, int column, const std::string& message);

    Kind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    Kind kind_;
    int line_;
    int column_;
};

/// Parses the INI-style design format. Keys carry their unit in the suffix
/// (radius_um, youngs_modulus_gpa, ...) and are converted to SI. Unknown
/// sections and keys are rejected.
DesignFile parse_design_file(std::string_view text);
DesignFile load_design_file(const std::string& path);

/// Inverse of parse_design_file: parse_design_file(write_design_file(f)) == f.
std::string write_design_file(const DesignFile& design);

}  // namespace cmut
