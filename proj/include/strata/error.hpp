#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace strata {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A state index outside the chain.
class IndexError : public Error {
  public:
    using Error::Error;
};

/// Structurally invalid model (negative rate, duplicate transition, bad distribution, ...).
class ModelError : public Error {
  public:
    using Error::Error;
};

/// A numeric argument outside its admissible range.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// A caller violated a documented precondition (e.g. a non-stratified chain).
class ContractError : public Error {
  public:
    using Error::Error;
};

/// Input that is syntactically valid but outside the supported fragment.
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

class InternalError : public Error {
  public:
    using Error::Error;
};

/// A time beyond the end of a truncated path.
class CoverageError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Formula syntax error; `position()` is a 0-based byte offset into the input.
class ParseError : public Error {
  public:
    ParseError(std::size_t position, const std::string& message)
        : Error("parse error at position " + std::to_string(position) + ": " + message),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

  private:
    std::size_t position_;
};

/// Model file error carrying the offending 1-based line number (0 if not line specific).
class FormatError : public Error {
  public:
    FormatError(std::string file, std::size_t line, const std::string& message)
        : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

} // namespace strata
