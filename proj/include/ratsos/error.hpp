#pragma once

/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every ratsos module.
 *
 * Each class of failure gets its own type so the command-line front end can
 * map it onto a distinct exit code.
 */

#include <stdexcept>
#include <string>

namespace ratsos {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched variable counts or matrix shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Problem-file or SDPA-file syntax error, carrying a 1-based position.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Relaxation could not be assembled (order too small, bad permutation, ...).
class BuildError : public Error {
public:
    using Error::Error;
};

/// Clique structure violates coverage, containment or the running intersection property.
class CliqueError : public BuildError {
public:
    using BuildError::BuildError;
};

/// Solver refused the instance (size cap) or hit an unrecoverable failure.
class SolveError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Grid oracle found no feasible sample.
class InfeasibleSampleError : public Error {
public:
    using Error::Error;
};

}  // namespace ratsos
