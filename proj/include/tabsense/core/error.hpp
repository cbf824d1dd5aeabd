#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tabsense {

// Coarse error classes. The service maps them onto HTTP status codes and the
// CLI onto its machine-parsable error prefix.
enum class ErrorCode {
  kInvalidArgument,      // malformed input or configuration
  kNotFound,             // unknown session / model / job / file
  kConflict,             // concurrent mutation
  kPrecondition,         // valid request in the wrong state
  kIo,                   // unreadable or unwritable file
  kFormat,               // malformed file contents
  kVersion,              // unsupported model file version
  kChecksum,             // model file integrity failure
  kFingerprintMismatch,  // model and data encodings differ
  kDomain,               // numeric value outside an operation's domain
  kInternal,             // unexpected failure
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace tabsense
