#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace popa {

enum class ErrorCode {
  MalformedRow,
  OutOfRange,
  NonMonotonicTimestamp,
  MalformedHeader,
  InfeasibleRanges,
  InvalidArgument,
  EmptyCounts,
  DimensionMismatch,
  KTooLarge,
  SingleClass,
  ClassTooSmall,
  SubjectMismatch,
  EmptyBackground,
  SessionTerminated,
  WindowVacant,
  IoFailure,
  InvalidSubjectId,
  VersionMismatch,
  CorruptProfile,
  CorruptModel,
  DuplicateSubject,
  TooShort,
  RefusingOverwrite,
  BadConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library is reported through this exception. `line()`
/// is the 1-based input line for parse errors, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  /// The message without the code and line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::size_t line_;
  std::string detail_;
};

}  // namespace popa
