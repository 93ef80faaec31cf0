#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "scaffold/core_model.hpp"
#include "scaffold/explain.hpp"
#include "scaffold/grader.hpp"
#include "scaffold/puzzle_gen.hpp"

namespace scaffold {

enum class Phase { Writing, ParsonsActive, ParsonsSolved, Correct, SelfExplanation, Done };

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> phase_from_string(std::string_view name) noexcept;

struct Session {
  std::string id;
  std::string problem_id;
  std::string student_id;
  Phase phase = Phase::Writing;
  std::string latest_code;
  /// Present iff phase is ParsonsActive, ParsonsSolved or SelfExplanation.
  std::optional<ParsonsPuzzle> puzzle;
  int parsons_failures = 0;
  int merges_allowed = 0;
  bool used_parsons_help = false;
  int help_count = 0;
  /// Parsons submissions against the current puzzle.
  int parsons_attempts = 0;
  std::optional<SubgoalList> subgoals;
  /// Kept after copy-back so the self-explanation can show the solution again.
  std::optional<ParsonsPuzzle> solved_puzzle;
  std::optional<Arrangement> solved_arrangement;
  std::optional<ClozeQuestion> cloze;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
  int last_seq = 0;

  bool operator==(const Session&) const = default;
};

enum class EventKind {
  CodeAttempt,
  HelpRequested,
  ParsonsAttempt,
  Merge,
  CopySolution,
  ExplanationViewed,
  ClozeAnswered,
  PhaseChange,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

struct Event {
  std::string session_id;
  int seq = 0;
  EventKind kind = EventKind::PhaseChange;
  nlohmann::json payload;
  std::int64_t ts = 0;

  bool operator==(const Event&) const = default;
};

/// One log line: {session_id, seq, kind, payload, ts} in that order.
std::string event_to_line(const Event& e);
Event event_from_line(std::string_view line);

void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

/// Milliseconds since the epoch.
using Clock = std::function<std::int64_t()>;
Clock system_clock_ms();

/// Seed for the n-th help request of a session (FNV-1a over "id#n").
std::uint64_t help_seed(std::string_view session_id, int help_count);
std::uint64_t cloze_seed(std::string_view session_id);

struct HelpResult {
  ParsonsPuzzle puzzle;
  SubgoalList subgoals;
};

struct SelfExplanationResult {
  ClozeGrade grade;
  Phase phase = Phase::SelfExplanation;
};

struct StoreConfig {
  /// Root for problems/, sessions/, events/ and cache/. Empty keeps
  /// everything in memory.
  std::optional<std::filesystem::path> data_dir;
  GenConfig generation;
};

/// Owns problems, sessions and their event logs. Operations on one session
/// are serialized; distinct sessions proceed concurrently. A failed
/// operation leaves the session and its log untouched, except that a help
/// request answered with AlreadyCorrect is logged before the error is
/// raised.
class SessionStore {
 public:
  SessionStore(StoreConfig config, TextProvider& provider, const CodeEvaluator& evaluator,
               Clock clock = system_clock_ms());
  ~SessionStore();

  /// Validates the shape and, when `verify_reference` is set, that the
  /// reference solution passes its own suite (InvalidProblem otherwise).
  Problem add_problem(const Problem& problem, bool verify_reference = true);
  Problem get_problem(const std::string& id) const;

  /// `id` may be given to reproduce a recorded session.
  Session create_session(const std::string& problem_id, const std::string& student_id,
                         std::optional<std::string> id = std::nullopt);
  Session get_session(const std::string& id) const;
  std::vector<Event> events(const std::string& id) const;

  CodeEvalResult submit_code(const std::string& id, const std::string& code);
  HelpResult request_help(const std::string& id);
  GradeResult submit_parsons(const std::string& id, const Arrangement& arr);
  ParsonsPuzzle request_merge(const std::string& id, const std::string& a, const std::string& b);
  std::string copy_solution(const std::string& id);
  BlockExplanation explain_block(const std::string& id, const std::string& block_id);
  AtomExplanation explain_atom(const std::string& id, const std::string& block_id, int atom_index);
  /// The cloze (with answer key) and the solved puzzle; phase SelfExplanation.
  std::pair<ClozeQuestion, ParsonsPuzzle> self_explanation(const std::string& id) const;
  SelfExplanationResult submit_self_explanation(const std::string& id, const std::vector<int>& answers);

 private:
  struct Entry;
  struct Pending;

  std::shared_ptr<Entry> entry(const std::string& id) const;
  template <typename Fn>
  auto mutate(const std::string& id, Fn&& fn);
  void commit(Entry& entry, Session next, std::vector<Event> events);
  void load_from_disk();

  StoreConfig config_;
  TextProvider& provider_;
  const CodeEvaluator& evaluator_;
  Clock clock_;
  std::unique_ptr<ExplanationCache> cache_;
  std::unique_ptr<Explainer> explainer_;

  mutable std::mutex mu_;
  std::map<std::string, Problem> problems_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Rebuilds a session from its log in a fresh in-memory store. Recorded
/// evaluation results, subgoals and cloze questions are fed back through a
/// recording evaluator and a replay provider, so no interpreter or network
/// is needed. Throws Error(InvalidRequest) if the log does not reproduce
/// its own phase changes.
Session replay_events(const std::vector<Event>& events);

}  // namespace scaffold
