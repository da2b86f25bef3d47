#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfstop {

enum class ErrorKind {
    InvalidArgument,
    IncompatibleOperands,
    CapacityExceeded,
    ContractViolation,
    NumericalBlowup,
    ConfigError,
};

const char* to_string(ErrorKind kind);

// All library failures derive from Error so callers can map them onto exit
// codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class IncompatibleOperands : public Error {
public:
    explicit IncompatibleOperands(const std::string& what)
        : Error(ErrorKind::IncompatibleOperands, what) {}
};

class CapacityExceeded : public Error {
public:
    explicit CapacityExceeded(const std::string& what) : Error(ErrorKind::CapacityExceeded, what) {}
};

class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& what)
        : Error(ErrorKind::ContractViolation, what) {}
};

class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, std::size_t step, std::size_t particle);
    std::size_t step() const noexcept { return step_; }
    std::size_t particle() const noexcept { return particle_; }

private:
    std::size_t step_;
    std::size_t particle_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0);
    // 1-based line in the config text, 0 when unknown.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace mfstop
