#include "xpose/errors.hpp"

namespace xpose {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonInvertibleHomography: return "NonInvertibleHomography";
    case ErrorCode::DegenerateElevation: return "DegenerateElevation";
    case ErrorCode::DegeneratePole: return "DegeneratePole";
    case ErrorCode::GeneratorFailure: return "GeneratorFailure";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::ZeroTranslation: return "ZeroTranslation";
    case ErrorCode::NearPiRotation: return "NearPiRotation";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
  }
  return "Unknown";
}

std::string_view to_string(GeneratorFailureKind kind) {
  switch (kind) {
    case GeneratorFailureKind::None: return "none";
    case GeneratorFailureKind::Unavailable: return "unavailable";
    case GeneratorFailureKind::Timeout: return "timeout";
    case GeneratorFailureKind::HttpStatus: return "http_status";
    case GeneratorFailureKind::Decode: return "decode";
    case GeneratorFailureKind::CountMismatch: return "count_mismatch";
    case GeneratorFailureKind::Precondition: return "precondition";
  }
  return "unknown";
}

}  // namespace xpose
