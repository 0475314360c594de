#pragma once

#include <stdexcept>
#include <string>

namespace gpnet {

enum class ErrorCode {
  kUsage,            // bad flags / invalid configuration
  kInput,            // caller contract violation (dimension mismatch, bad ids)
  kMissingFile,      // bundle or cache file absent
  kCountMismatch,    // bundle payload disagrees with meta.json
  kIndexOutOfRange,  // node id, label or split index out of range
  kMalformed,        // unparsable file content
  kIo,               // read/write failure
  kNumeric,          // NaN loss, solver failure
  kResource,         // memory cap exceeded
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit code for the CLI: 1 usage, 2 data, 3 numeric, 4 resource.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInput:
      return 1;
    case ErrorCode::kMissingFile:
    case ErrorCode::kCountMismatch:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kMalformed:
    case ErrorCode::kIo:
      return 2;
    case ErrorCode::kNumeric:
      return 3;
    case ErrorCode::kResource:
      return 4;
  }
  return 1;
}

const char* to_string(ErrorCode code);

}  // namespace gpnet
