#pragma once

#include <stdexcept>
#include <string>

namespace compforge {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input text that is not well-formed (bad JSON, wrong value types).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    explicit ParseError(const std::string& what) : ParseError(what, 0) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a schema or data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Both optimizer runs failed to produce a finite result.
class OptimizationError : public Error {
public:
    using Error::Error;
};

class AnnotationError : public Error {
public:
    AnnotationError(const std::string& pair_id, const std::string& what)
        : Error("annotation failed for " + pair_id + ": " + what), pair_id_(pair_id) {}

    const std::string& pair_id() const noexcept { return pair_id_; }

private:
    std::string pair_id_;
};

}  // namespace compforge
