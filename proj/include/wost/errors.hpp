#pragma once

#include <stdexcept>
#include <string>

namespace wost {

enum class ErrorCategory { Usage, Parse, Invariant, MissingFile, Io, Mismatch };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return "usage error";
    case ErrorCategory::Parse: return "parse error";
    case ErrorCategory::Invariant: return "invalid input";
    case ErrorCategory::MissingFile: return "missing file";
    case ErrorCategory::Io: return "I/O error";
    case ErrorCategory::Mismatch: return "validation mismatch";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace wost
