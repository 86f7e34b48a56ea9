#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace itree {

enum class ErrorCode {
  // event log
  MalformedXml,
  MissingActivity,
  // process tree
  InvalidTree,
  BudgetExceeded,
  InvalidPath,
  BelowLeaf,
  LeftOfRoot,
  CannotRemoveRoot,
  NoSibling,
  NotALeaf,
  InvalidLabel,
  MalformedPtml,
  UnknownNodeKind,
  DanglingEdge,
  // petri net / alignment
  NotEnabled,
  SearchBudgetExceeded,
  // discovery
  EmptyInput,
  EmptySelection,
  InconsistentInput,
  TraceFits,
  // session
  UnknownSession,
  UnknownVariant,
  NoLog,
  NoModel,
  InconsistentModel,
  NothingToUndo,
  NothingToRedo,
  InvalidRequest,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::MissingActivity: return "MissingActivity";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::BelowLeaf: return "BelowLeaf";
    case ErrorCode::LeftOfRoot: return "LeftOfRoot";
    case ErrorCode::CannotRemoveRoot: return "CannotRemoveRoot";
    case ErrorCode::NoSibling: return "NoSibling";
    case ErrorCode::NotALeaf: return "NotALeaf";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::MalformedPtml: return "MalformedPtml";
    case ErrorCode::UnknownNodeKind: return "UnknownNodeKind";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::NotEnabled: return "NotEnabled";
    case ErrorCode::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::TraceFits: return "TraceFits";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::NoLog: return "NoLog";
    case ErrorCode::NoModel: return "NoModel";
    case ErrorCode::InconsistentModel: return "InconsistentModel";
    case ErrorCode::NothingToUndo: return "NothingToUndo";
    case ErrorCode::NothingToRedo: return "NothingToRedo";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
  }
  return "Unknown";
}

/// Every failure raised by the engine. The code is part of the public
/// contract (it is what the HTTP error envelope and CLI exit codes key on);
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace itree
