#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace convnorm {

enum class ErrorCode {
  InvalidGeometry,
  InvalidArgument,
  NonFiniteValue,
  AssumptionViolated,
  PaddingPresent,
  NonPositiveSigma,
  ShapeMismatch,
  SizeOverflow,
  BadMagic,
  BadVersion,
  TruncatedPayload,
  UnsupportedDtype,
  ManifestParse,
  MissingBlob,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI, the Python module) can branch on it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace convnorm
