#include "convnorm/error.hpp"

namespace convnorm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::PaddingPresent: return "PaddingPresent";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SizeOverflow: return "SizeOverflow";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::MissingBlob: return "MissingBlob";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace convnorm
