#pragma once

#include <stdexcept>
#include <string>

namespace carbonsim {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed carbon trace input. `row()` is the 1-based data row (0 for header/file-level problems).
class TraceParseError : public Error {
public:
    TraceParseError(const std::string& what, std::size_t row)
        : Error(what), row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Query outside the domain of a carbon trace.
class TraceRangeError : public Error {
public:
    using Error::Error;
};

class WorkloadError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class AnalysisError : public Error {
public:
    using Error::Error;
};

} // namespace carbonsim
