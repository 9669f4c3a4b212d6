#pragma once

#include <stdexcept>
#include <string>

namespace cloudburst {

// Bad or inconsistent configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Syntax error in a configuration file, with 1-based line/column.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, int line, int column)
        : ConfigError(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// A failure while the simulation is executing. Maps to CLI exit code 2.
class SimulationFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchedulingError : public SimulationFault {
public:
    using SimulationFault::SimulationFault;
};

// NaN/inf encountered in the photon kernel.
class NumericalFault : public SimulationFault {
public:
    using SimulationFault::SimulationFault;
};

}  // namespace cloudburst
