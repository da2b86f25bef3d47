#include "mfstop/error.hpp"

namespace mfstop {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::IncompatibleOperands: return "incompatible-operands";
        case ErrorKind::CapacityExceeded: return "capacity-exceeded";
        case ErrorKind::ContractViolation: return "contract-violation";
        case ErrorKind::NumericalBlowup: return "numerical-blowup";
        case ErrorKind::ConfigError: return "config-error";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

NumericalBlowup::NumericalBlowup(const std::string& what, std::size_t step, std::size_t particle)
    : Error(ErrorKind::NumericalBlowup,
            what + " (step " + std::to_string(step) + ", particle " + std::to_string(particle) + ")"),
      step_(step),
      particle_(particle) {}

ConfigError::ConfigError(const std::string& what, std::size_t line)
    : Error(ErrorKind::ConfigError, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

}  // namespace mfstop
