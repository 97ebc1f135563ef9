#pragma once

#include <stdexcept>
#include <string>

namespace fkpp {

/// Raised when the discrete problem cannot be advanced (Newton failure,
/// positivity loss, no equilibrium reached). Maps to CLI exit code 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on malformed input files or configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fkpp
