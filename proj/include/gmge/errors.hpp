#pragma once

#include <stdexcept>
#include <string>

namespace gmge {

// Error taxonomy. The CLI maps these onto exit codes:
// validation-type errors -> 1, I/O errors -> 2, numerical failures -> 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between tensors / volumes.
struct DimError : Error {
    using Error::Error;
};

// Invalid argument values (labels outside {0,1}, non-scalar loss, ...).
struct ValueError : Error {
    using Error::Error;
};

// Bad configuration (unknown keys, spatial collapse, sizing problems).
struct ConfigError : Error {
    using Error::Error;
};

// File system / OS-level failures.
struct IoError : Error {
    using Error::Error;
};

// Malformed file contents; carries the byte offset of the problem.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// Non-finite loss or gradient during optimization.
struct NumericError : Error {
    using Error::Error;
};

// Heatmap too weak to place a VOI; the sample is flagged, never
// silently center-cropped.
struct NoSignalError : Error {
    using Error::Error;
};

}  // namespace gmge
