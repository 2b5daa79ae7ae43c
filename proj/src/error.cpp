#include "ionaddr/error.h"

namespace ionaddr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kConvergence: return "convergence";
    case ErrorKind::kSingularConfiguration: return "singular-configuration";
    case ErrorKind::kSampling: return "sampling";
    case ErrorKind::kPropagationWindow: return "propagation-window";
    case ErrorKind::kInvalidGeometry: return "invalid-geometry";
    case ErrorKind::kFocusNotBracketed: return "focus-not-bracketed";
    case ErrorKind::kNoTir: return "no-tir";
    case ErrorKind::kTrappedRay: return "trapped-ray";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ionaddr
