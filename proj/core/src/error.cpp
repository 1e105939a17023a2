#include "causalmp/error.hpp"

namespace causalmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShape: return "shape_mismatch";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kStaleCache: return "stale_cache";
  }
  return "unknown";
}

}  // namespace causalmp
