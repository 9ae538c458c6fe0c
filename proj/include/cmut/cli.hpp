#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cmut/dynamics.hpp"

namespace cmut::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

struct Column {
    std::string name;
    std::string unit;
};

/// Rectangular numeric output shared by the CSV and JSON writers.
struct Table {
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;
};

/// Header of "name(unit)" cells, then one line per row with 9 significant digits.
std::string to_csv(const Table& table);
std::string to_json(const Table& table);

/// Drive grammar: "zero", "dc:100", "sine:dc=10,ac=5,f=1.75e6[,phase=0]",
/// "pulse:amp=132.75,start=0,width=1e-7". Throws InvalidInput on malformed specs.
DriveSignal parse_drive_spec(const std::string& spec);

/// Runs one command line (without the program name). Returns the process exit
/// code: 0 success, 1 computation failure, 2 input or usage error. --out files
/// are written only after the computation succeeded.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmut::cli
