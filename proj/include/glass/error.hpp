#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glass {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  NonFinite,
  InvalidSigma,
  MissingLabel,
  EmptyDataset,
  InvalidArgument,
  DegenerateWeights,
  EmptyList,
  MixedOrientation,
  TooFewDraws,
  UnlabeledTemplate,
  ZeroTrueEffect,
  IncompleteHalfSequence,
  WindowOverrun,
  InvalidBand,
  InvalidRate,
  LengthMismatch,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glass
