#pragma once

#include <stdexcept>
#include <string>

namespace trendtune {

// Base type for every error raised by the library. Callers that only want
// a single catch site can catch this; everything more specific derives
// from it.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text: CSV rows, sketch rule files, config files,
// parameter files. Carries a line number when one is known (0 = unknown).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

// Well-formed input whose values violate a declared invariant
// (high < low, non-monotone timestamps, weights off the simplex, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A run configuration that cannot be executed as requested: unknown keys,
// mode mismatches, missing files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A numeric precondition was violated (empty window, non-positive
// temperature, horizon of zero, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// An objective evaluation could not produce a usable value.
class EvalError : public Error {
public:
    using Error::Error;
};

}  // namespace trendtune
