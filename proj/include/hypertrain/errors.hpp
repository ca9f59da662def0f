#ifndef HYPERTRAIN_ERRORS_HPP
#define HYPERTRAIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hypertrain {

/// Dimension or layout mismatch between operands.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error("shape error: " + what) {}
};

/// A non-finite value appeared mid-computation. The message names the operation.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error("numeric error: " + what) {}
};

/// Malformed input file. The message names the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error("parse error: " + what) {}
};

/// Invalid or inconsistent run configuration. The message names the offending key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error("config error: " + what) {}
};

/// The request exceeds a documented capability limit (e.g. exact-Hessian dimension cap).
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& what) : std::runtime_error("capability error: " + what) {}
};

/// Filesystem failure while reading inputs or writing artifacts.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error("i/o error: " + what) {}
};

} // namespace hypertrain

#endif
