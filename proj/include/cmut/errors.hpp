#pragma once

#include <stdexcept>
#include <string>

namespace cmut {

/// Base class for everything the toolkit throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid physical or configuration input (non-finite, out of range).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Plates touching: a displacement at or beyond the gap was requested.
class ContactError : public Error {
public:
    using Error::Error;
};

/// Time integration produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// A calibration target cannot be reached within the admissible range.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Root-finding bounds do not bracket the target.
class BracketError : public Error {
public:
    using Error::Error;
};

/// Metric/parameter combinations that cannot be evaluated together.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cmut
