#ifndef XPOSE_ERRORS_HPP
#define XPOSE_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace xpose {

enum class ErrorCode {
  InvalidArgument,
  NonInvertibleHomography,
  DegenerateElevation,
  DegeneratePole,
  GeneratorFailure,
  EmptyMask,
  IoFailure,
  EmptyList,
  ZeroTranslation,
  NearPiRotation,
  DisconnectedGraph,
};

// Sub-classification for ErrorCode::GeneratorFailure.
enum class GeneratorFailureKind {
  None,
  Unavailable,
  Timeout,
  HttpStatus,
  Decode,
  CountMismatch,
  Precondition,
};

std::string_view to_string(ErrorCode code);
std::string_view to_string(GeneratorFailureKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}
  Error(GeneratorFailureKind kind, const std::string& message)
      : std::runtime_error(std::string("GeneratorFailure(") +
                           std::string(to_string(kind)) + "): " + message),
        code_(ErrorCode::GeneratorFailure),
        generator_kind_(kind) {}

  ErrorCode code() const noexcept { return code_; }
  GeneratorFailureKind generator_kind() const noexcept { return generator_kind_; }

 private:
  ErrorCode code_;
  GeneratorFailureKind generator_kind_ = GeneratorFailureKind::None;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::InvalidArgument, message);
}

}  // namespace xpose

#endif  // XPOSE_ERRORS_HPP
