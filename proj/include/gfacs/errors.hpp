#pragma once

#include <stdexcept>
#include <string>

namespace gfacs {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A solution violates the constraints of its instance.
struct ValidationError : Error {
    using Error::Error;
};

/// Bad user-supplied configuration (sizes, ranges, flags).
struct ConfigError : Error {
    using Error::Error;
};

/// A JSON document does not match the expected schema.
struct SchemaError : Error {
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    int line;
};

/// Recognized file, but a variant this library does not handle.
struct UnsupportedFormatError : Error {
    using Error::Error;
};

/// Non-finite value reached a place that must abort rather than clamp.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace gfacs
