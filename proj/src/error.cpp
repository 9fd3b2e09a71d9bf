#include "bsprtl/error.hpp"

#include <fmt/format.h>

namespace bsprtl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnresolvedRef: return "UnresolvedRef";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorCode::LiteralOverflow: return "LiteralOverflow";
    case ErrorCode::WidthOverflow: return "WidthOverflow";
    case ErrorCode::InvalidDeclaration: return "InvalidDeclaration";
    case ErrorCode::MissingNext: return "MissingNext";
    case ErrorCode::MultipleNext: return "MultipleNext";
    case ErrorCode::CombinationalLoop: return "CombinationalLoop";
    case ErrorCode::UnknownOp: return "UnknownOp";
    case ErrorCode::GroupExceedsMemory: return "GroupExceedsMemory";
    case ErrorCode::InfeasibleBalance: return "InfeasibleBalance";
    case ErrorCode::DesignTooLarge: return "DesignTooLarge";
    case ErrorCode::StimulusExhausted: return "StimulusExhausted";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ScheduleIncomplete: return "ScheduleIncomplete";
    case ErrorCode::SpecTooLarge: return "SpecTooLarge";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_capacity_error(ErrorCode code) {
  return code == ErrorCode::DesignTooLarge || code == ErrorCode::GroupExceedsMemory ||
         code == ErrorCode::InfeasibleBalance || code == ErrorCode::SpecTooLarge;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, SourceLoc loc)
    : std::runtime_error(fmt::format("{} at {}:{}: {}", to_string(code), loc.line, loc.col, message)),
      code_(code),
      loc_(loc) {}

}  // namespace bsprtl
