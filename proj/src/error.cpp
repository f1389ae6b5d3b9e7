#include "sqlstruct/error.hpp"

namespace sqlstruct {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GoldUnparseable:
      return "gold-unparseable";
    case ErrorCode::GoldExecutionFailed:
      return "gold-execution-failed";
    case ErrorCode::UndefinedMajority:
      return "undefined-majority";
    case ErrorCode::NoData:
      return "no-data";
    case ErrorCode::InvalidInput:
      return "invalid-input";
    case ErrorCode::Io:
      return "io";
    case ErrorCode::Auth:
      return "auth";
    case ErrorCode::Provider:
      return "provider";
  }
  return "unknown";
}

}  // namespace sqlstruct
