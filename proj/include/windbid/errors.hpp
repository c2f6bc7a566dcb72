#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace windbid {

/// Base of every error raised by the engine. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside its mathematical domain (negative certificate, fraction > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A value that violates a data invariant (non-finite price, non-positive volume, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A timestamp that does not sit on its resolution grid.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Wrong number of elements for the configured resolutions.
class ShapeError : public Error {
public:
    using Error::Error;
};

class DuplicateError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line and column of the offending field.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, std::size_t column, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          file_(std::move(file)), line_(line), column_(column) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::string file_;
    std::size_t line_;
    std::size_t column_;
};

}  // namespace windbid
