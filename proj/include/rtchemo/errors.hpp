#pragma once

#include <stdexcept>
#include <string>

namespace rtchemo {

// Argument outside the domain of a model function (negative ligand, x outside a table).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A time step that would break positivity of an explicit stage.
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input data that cannot be normalized or has no meaningful answer (zero mass, negative density).
struct DegenerateInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Mass reached the edge of the truncated y-domain.
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedOrder : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace rtchemo
