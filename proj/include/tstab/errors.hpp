#pragma once

#include <stdexcept>
#include <string>

namespace tstab {

/// Malformed or inconsistent input data (case files, fault specs, configs).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure inside an algorithm (singular system, degenerate geometry).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tstab
