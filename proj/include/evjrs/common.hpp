#pragma once

#include <stdexcept>
#include <string>

namespace evjrs {

// Error categories map one-to-one onto CLI exit codes (see README).
enum class ErrorCategory {
  usage = 2,
  io = 3,
  validation = 4,
  solve = 5,
  config = 6,
  internal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::solve: return "solve";
    case ErrorCategory::config: return "config";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

}  // namespace evjrs
