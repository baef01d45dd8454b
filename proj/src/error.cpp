#include "proxyhpo/error.hpp"

namespace proxyhpo {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kCorruptPayload: return "corrupt payload";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kNotNifti: return "not nifti";
    case ErrorCode::kDimensionality: return "dimensionality error";
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kInvalidWindow: return "invalid window";
    case ErrorCode::kEmptyLabel: return "empty label";
    case ErrorCode::kGeometry: return "geometry error";
    case ErrorCode::kBudget: return "budget error";
    case ErrorCode::kSplit: return "split error";
    case ErrorCode::kMode: return "mode error";
    case ErrorCode::kSchedule: return "schedule error";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kCrashedTrainer: return "crashed trainer";
    case ErrorCode::kTrainerReported: return "trainer error";
    case ErrorCode::kUndefinedCorrelation: return "undefined correlation";
    case ErrorCode::kRange: return "range error";
    case ErrorCode::kDivision: return "division error";
    case ErrorCode::kAlignment: return "alignment error";
  }
  return "error";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kAlignment); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (error_code_name(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace proxyhpo
