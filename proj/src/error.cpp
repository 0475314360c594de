#include "gpnet/error.hpp"

namespace gpnet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kInput: return "input";
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kCountMismatch: return "count-mismatch";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kResource: return "resource";
  }
  return "unknown";
}

}  // namespace gpnet
