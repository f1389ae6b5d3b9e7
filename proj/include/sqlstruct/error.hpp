#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqlstruct {

enum class ErrorCode {
  GoldUnparseable,
  GoldExecutionFailed,
  UndefinedMajority,
  NoData,
  InvalidInput,
  Io,
  Auth,
  Provider,
};

std::string_view to_string(ErrorCode code);

/// Library error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sqlstruct
