#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace genconv {

// Error hierarchy; the CLI maps each class to a distinct exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / size mismatches between tensors, layers, or tables.
struct ShapeError : Error {
    using Error::Error;
};

// API misuse such as backward() without a prior forward().
struct StateError : Error {
    using Error::Error;
};

// Invalid or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Dataset / file problems (missing files, malformed content).
struct DataError : Error {
    using Error::Error;
};

// Parse failure with a 1-based line number.
struct ParseError : DataError {
    ParseError(const std::string& msg, int line)
        : DataError(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    int line_number;
};

// Non-finite values where finiteness was promised (e.g. training loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace genconv
