#pragma once

#include <stdexcept>
#include <string>

namespace nalpha {

/// Base of every error raised by the library. The CLI maps this family to
/// exit code 1 (user / data error); anything else is treated as internal.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files and configuration.
class InputError : public Error {
public:
    using Error::Error;

    InputError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what) {}
};

/// A computation whose preconditions do not hold for the supplied data
/// (insufficient breadth, singular systems, degenerate series).
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace nalpha
