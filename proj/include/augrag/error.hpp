#pragma once

#include <stdexcept>
#include <string>

namespace augrag {

/// Invalid input supplied by the caller: bad arguments, malformed files,
/// violated preconditions. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A remote model endpoint failed (unreachable, timeout, bad status,
/// malformed reply).
class ClientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector dimensions or kinds do not line up.
class DimensionError : public InputError {
public:
    using InputError::InputError;
};

} // namespace augrag
