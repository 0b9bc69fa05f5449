#pragma once

#include <stdexcept>
#include <string>

namespace edp {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to an operation (empty node list, nonpositive step, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A custom cost model was evaluated outside its declared domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Graph shape violates a precondition (disconnected, self-loop, duplicate edge).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Simulation configuration rejected, e.g. the Euler stability guard.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A network or scenario document failed validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A document could not be parsed. `locus` names the line/column or field path.
class ParseError : public Error {
public:
    ParseError(std::string locus, const std::string& what)
        : Error(locus + ": " + what), locus_(std::move(locus)) {}

    [[nodiscard]] const std::string& locus() const noexcept { return locus_; }

private:
    std::string locus_;
};

/// A scenario event could not be applied (unknown node, breaks connectivity, ...).
class ScenarioError : public Error {
public:
    using Error::Error;
};

}  // namespace edp
