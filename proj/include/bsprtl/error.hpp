#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bsprtl {

enum class ErrorCode {
  SyntaxError,
  DuplicateId,
  UnresolvedRef,
  KindMismatch,
  WidthMismatch,
  SliceOutOfRange,
  LiteralOverflow,
  WidthOverflow,
  InvalidDeclaration,
  MissingNext,
  MultipleNext,
  CombinationalLoop,
  UnknownOp,
  GroupExceedsMemory,
  InfeasibleBalance,
  DesignTooLarge,
  StimulusExhausted,
  IndexOutOfRange,
  ScheduleIncomplete,
  SpecTooLarge,
  UsageError,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// True for the codes that mean "does not fit the machine" (CLI exit code 2).
bool is_capacity_error(ErrorCode code);

struct SourceLoc {
  std::uint32_t line = 0;
  std::uint32_t col = 0;
};

struct Diagnostic {
  ErrorCode code;
  std::string message;
  SourceLoc loc;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, SourceLoc loc);

  ErrorCode code() const noexcept { return code_; }
  SourceLoc loc() const noexcept { return loc_; }

 private:
  ErrorCode code_;
  SourceLoc loc_;
};

}  // namespace bsprtl
