#pragma once

#include <stdexcept>
#include <string>

namespace madness {

// Malformed or inconsistent input data (CLI exit code 3).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-convergence, separation, rank deficiency (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace madness
