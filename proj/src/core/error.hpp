#pragma once

#include <stdexcept>
#include <string>

namespace b3d {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorCode {
  invalid = 1,  // bad argument / precondition violation
  config = 2,   // malformed or rejected configuration
  io = 3,       // filesystem / format failure
  numeric = 4,  // numerical failure (e.g. all-zero scores at stage 0)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace b3d
