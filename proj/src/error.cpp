#include "scaffold/error.hpp"

namespace scaffold {

namespace {

struct ErrorInfo {
  ErrorCode code;
  std::string_view name;
  int status;
};

constexpr ErrorInfo kErrors[] = {
    {ErrorCode::InvalidRequest, "invalid_request", 400},
    {ErrorCode::NotFound, "not_found", 404},
    {ErrorCode::InvalidProblem, "invalid_problem", 422},
    {ErrorCode::UnknownBlock, "unknown_block", 422},
    {ErrorCode::DuplicateBlock, "duplicate_block", 422},
    {ErrorCode::AlreadyCorrect, "already_correct", 409},
    {ErrorCode::NotAdjacent, "not_adjacent", 422},
    {ErrorCode::NotMovable, "not_movable", 422},
    {ErrorCode::TooFewBlocks, "too_few_blocks", 422},
    {ErrorCode::InvalidPhase, "invalid_phase", 409},
    {ErrorCode::MergeLocked, "merge_locked", 409},
    {ErrorCode::AtomOutOfRange, "atom_out_of_range", 422},
    {ErrorCode::AnswerCountMismatch, "answer_count_mismatch", 422},
    {ErrorCode::DistractorNotExplainable, "distractor_not_explainable", 422},
    {ErrorCode::EvaluatorUnavailable, "evaluator_unavailable", 503},
};

}  // namespace

std::string_view error_code_name(ErrorCode code) noexcept {
  for (const auto& info : kErrors) {
    if (info.code == code) return info.name;
  }
  return "invalid_request";
}

int error_http_status(ErrorCode code) noexcept {
  for (const auto& info : kErrors) {
    if (info.code == code) return info.status;
  }
  return 400;
}

}  // namespace scaffold
