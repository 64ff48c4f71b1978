#include "glass/error.hpp"

namespace glass {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::MixedOrientation: return "MixedOrientation";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::UnlabeledTemplate: return "UnlabeledTemplate";
    case ErrorCode::ZeroTrueEffect: return "ZeroTrueEffect";
    case ErrorCode::IncompleteHalfSequence: return "IncompleteHalfSequence";
    case ErrorCode::WindowOverrun: return "WindowOverrun";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace glass
