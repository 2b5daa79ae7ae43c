#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ionaddr {

enum class ErrorKind {
  kInvalidInput,
  kConvergence,
  kSingularConfiguration,
  kSampling,
  kPropagationWindow,
  kInvalidGeometry,
  kFocusNotBracketed,
  kNoTir,
  kTrappedRay,
  kInfeasible,
  kParse,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so that front ends can
// map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace ionaddr
