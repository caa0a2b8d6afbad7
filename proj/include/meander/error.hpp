#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meander {

enum class ErrorKind {
  InvalidNumerics,
  InvalidParams,
  NoRealRoot,
  BlowUp,
  SingularPinning,
  NoTip,
  TooShort,
  MismatchedRange,
  MissingSnapshot,
  Parse,
  Config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidNumerics: return "InvalidNumerics";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::SingularPinning: return "SingularPinning";
    case ErrorKind::NoTip: return "NoTip";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::MismatchedRange: return "MismatchedRange";
    case ErrorKind::MissingSnapshot: return "MissingSnapshot";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (sweeps, the CLI) can route numerical failures differently from
/// configuration mistakes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace meander
