#pragma once

#include <stdexcept>
#include <string>

namespace l2c {

// Bad ids, overlapping query sets, malformed files.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Singular covariance, degenerate regressions.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A size limit of an exponential routine was exceeded.
class CapacityError : public std::length_error {
public:
    explicit CapacityError(const std::string& what) : std::length_error(what) {}
};

// Caller violated an operation's precondition (e.g. estimating a do-expression).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace l2c
