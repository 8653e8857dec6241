#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mycofreq {

// Base of every error thrown by the library. The subclass decides the
// process exit code used by the command line tool.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments, malformed input files, violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The numerics failed on otherwise valid input.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NewtonDivergence : public NumericalError {
public:
    NewtonDivergence(std::size_t step, int iterations)
        : NumericalError("Newton iteration did not converge at step " + std::to_string(step) +
                         " after " + std::to_string(iterations) + " iterations"),
          step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

}  // namespace detail

}  // namespace mycofreq
