#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace proxyhpo {

enum class ErrorCode {
  kIo,
  kCorruptPayload,
  kUnsupportedFormat,
  kNotNifti,
  kDimensionality,
  kInvalidInput,
  kInvalidWindow,
  kEmptyLabel,
  kGeometry,
  kBudget,
  kSplit,
  kMode,
  kSchedule,
  kProtocol,
  kTimeout,
  kCrashedTrainer,
  kTrainerReported,
  kUndefinedCorrelation,
  kRange,
  kDivision,
  kAlignment,
};

std::string_view error_code_name(ErrorCode code);

/// Inverse of error_code_name; nullopt for unknown names.
std::optional<ErrorCode> parse_error_code(std::string_view name);

// Every failure the library reports is an Error tagged with the condition
// that produced it, so callers (the CLI in particular) can map it to an exit
// status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace proxyhpo
