#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace betaspec {

//! Input outside the mathematical domain of an operation (negative energy, p = 0, ...).
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//! Bad configuration: unknown tags, inconsistent grids, missing fields.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Data violating a documented invariant (negative probability, bad normalization).
class ValidationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error
{
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

//! Discretization failed its convergence gate.
class AccuracyError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Model produced an unusable prediction (e.g. negative expected counts).
class ModelError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace betaspec
