#include "ionshuttle/error.hpp"

namespace ionshuttle {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid chip description";
    case ErrorKind::InvalidCircuit: return "invalid circuit";
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::MaskedAction: return "masked action";
    case ErrorKind::DependencyViolation: return "dependency violation";
    case ErrorKind::Capacity: return "capacity exceeded";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::BudgetExhausted: return "budget exhausted";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace ionshuttle
