#pragma once

#include <stdexcept>
#include <string>

namespace spraydot {

/// Base class of every error raised by the library. The CLI maps these to
/// a non-zero exit status and records the message in the run summary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or undecodable image file.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Rectangles out of bounds, mismatched mask dimensions, degenerate extents.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Malformed input to an algorithm (asymmetric distance matrix, bad config).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Statistically unusable data (empty samples, non-positive values).
class DataError : public Error {
public:
    using Error::Error;
};

/// Out-of-range parameters (k > N, fewer than two selected cells, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A leaf or artifact that should exist does not.
class LookupError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage was started without the artifact it consumes.
class DependencyError : public Error {
public:
    using Error::Error;
};

}  // namespace spraydot
