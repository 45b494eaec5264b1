#pragma once

#include <stdexcept>
#include <string>

namespace mfexp {

/// Argument outside the mathematical domain of an operation (negative ratio,
/// allocation rate at saturation, zero perturbation, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Regression design has no variation (all perturbation signs equal).
class DegenerateDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent experiment configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed to produce a usable answer. Maps to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mfexp
