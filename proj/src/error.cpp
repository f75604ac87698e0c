#include "popa/error.hpp"

namespace popa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::InfeasibleRanges: return "InfeasibleRanges";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::SubjectMismatch: return "SubjectMismatch";
    case ErrorCode::EmptyBackground: return "EmptyBackground";
    case ErrorCode::SessionTerminated: return "SessionTerminated";
    case ErrorCode::WindowVacant: return "WindowVacant";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSubjectId: return "InvalidSubjectId";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptProfile: return "CorruptProfile";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::DuplicateSubject: return "DuplicateSubject";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::RefusingOverwrite: return "RefusingOverwrite";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& what, std::size_t line) {
  std::string msg(to_string(code));
  if (line != 0) msg += " at line " + std::to_string(line);
  if (!what.empty()) msg += ": " + what;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::size_t line)
    : std::runtime_error(compose(code, what, line)), code_(code), line_(line), detail_(what) {}

}  // namespace popa
