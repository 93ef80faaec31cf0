#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scaffold {

/// Closed set of domain failures. Every value maps to one stable API code.
enum class ErrorCode {
  InvalidRequest,
  NotFound,
  InvalidProblem,
  UnknownBlock,
  DuplicateBlock,
  AlreadyCorrect,
  NotAdjacent,
  NotMovable,
  TooFewBlocks,
  InvalidPhase,
  MergeLocked,
  AtomOutOfRange,
  AnswerCountMismatch,
  DistractorNotExplainable,
  EvaluatorUnavailable,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

std::string_view error_code_name(ErrorCode code) noexcept;
int error_http_status(ErrorCode code) noexcept;

}  // namespace scaffold
