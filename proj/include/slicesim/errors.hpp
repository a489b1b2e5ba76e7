#pragma once

#include <stdexcept>
#include <string>

namespace slicesim {

// Failure classes map one-to-one onto CLI exit codes (see tools/).
enum class ErrorKind {
  config,        // bad flags, malformed input files
  validation,    // circuit/plan/tensor structure violates a contract
  io,            // storage and filesystem failures
  verification,  // simulated state disagrees with reference
  capacity,      // request exceeds what this build is sized for
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace slicesim
