#include "scaffold/session.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "scaffold/code_align.hpp"
#include "scaffold/error.hpp"
#include "scaffold/json_io.hpp"

namespace scaffold {

namespace {

constexpr std::array<std::string_view, 6> kPhaseNames = {
    "Writing", "ParsonsActive", "ParsonsSolved", "Correct", "SelfExplanation", "Done"};

constexpr std::array<std::string_view, 8> kEventNames = {
    "code_attempt", "help_requested", "parsons_attempt", "merge",
    "copy_solution", "explanation_viewed", "cloze_answered", "phase_change"};

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::vector<Block> explainable_blocks(const ParsonsPuzzle& puzzle) {
  std::vector<Block> out;
  for (const auto& b : puzzle.blocks) {
    if (b.kind != BlockKind::Distractor) out.push_back(b);
  }
  return out;
}

void require_phase(const Session& s, Phase expected, std::string_view op) {
  if (s.phase != expected) {
    throw Error(ErrorCode::InvalidPhase, std::string(op) + " is not allowed in phase " +
                                             std::string(to_string(s.phase)));
  }
}

std::string random_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[20];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string_view to_string(Phase phase) noexcept { return kPhaseNames[static_cast<std::size_t>(phase)]; }

std::optional<Phase> phase_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

std::string_view to_string(EventKind kind) noexcept { return kEventNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string event_to_line(const Event& e) {
  nlohmann::ordered_json j;
  j["session_id"] = e.session_id;
  j["seq"] = e.seq;
  j["kind"] = to_string(e.kind);
  j["payload"] = nlohmann::ordered_json::parse(e.payload.dump());
  j["ts"] = e.ts;
  return j.dump();
}

Event event_from_line(std::string_view line) {
  const auto j = json::parse(line);
  const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::InvalidRequest, "unknown event kind");
  return {j.at("session_id").get<std::string>(), j.at("seq").get<int>(), *kind, j.at("payload"),
          j.at("ts").get<std::int64_t>()};
}

void to_json(json& j, const Session& s) {
  j = json{
      {"id", s.id},
      {"problem_id", s.problem_id},
      {"student_id", s.student_id},
      {"phase", to_string(s.phase)},
      {"latest_code", s.latest_code},
      {"puzzle", opt_json(s.puzzle)},
      {"parsons_failures", s.parsons_failures},
      {"merges_allowed", s.merges_allowed},
      {"used_parsons_help", s.used_parsons_help},
      {"help_count", s.help_count},
      {"parsons_attempts", s.parsons_attempts},
      {"subgoals", opt_json(s.subgoals)},
      {"solved_puzzle", opt_json(s.solved_puzzle)},
      {"solved_arrangement", opt_json(s.solved_arrangement)},
      {"cloze", opt_json(s.cloze)},
      {"created_at", s.created_at},
      {"updated_at", s.updated_at},
      {"last_seq", s.last_seq},
  };
}

void from_json(const json& j, Session& s) {
  s.id = j.at("id").get<std::string>();
  s.problem_id = j.at("problem_id").get<std::string>();
  s.student_id = j.at("student_id").get<std::string>();
  const auto phase = phase_from_string(j.at("phase").get<std::string>());
  if (!phase) throw Error(ErrorCode::InvalidRequest, "unknown phase");
  s.phase = *phase;
  s.latest_code = j.at("latest_code").get<std::string>();
  s.puzzle = opt_from<ParsonsPuzzle>(j, "puzzle");
  s.parsons_failures = j.at("parsons_failures").get<int>();
  s.merges_allowed = j.at("merges_allowed").get<int>();
  s.used_parsons_help = j.at("used_parsons_help").get<bool>();
  s.help_count = j.at("help_count").get<int>();
  s.parsons_attempts = j.at("parsons_attempts").get<int>();
  s.subgoals = opt_from<SubgoalList>(j, "subgoals");
  s.solved_puzzle = opt_from<ParsonsPuzzle>(j, "solved_puzzle");
  s.solved_arrangement = opt_from<Arrangement>(j, "solved_arrangement");
  s.cloze = opt_from<ClozeQuestion>(j, "cloze");
  s.created_at = j.at("created_at").get<std::int64_t>();
  s.updated_at = j.at("updated_at").get<std::int64_t>();
  s.last_seq = j.at("last_seq").get<int>();
}

Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::uint64_t help_seed(std::string_view session_id, int help_count) {
  return fnv1a(std::string(session_id) + "#" + std::to_string(help_count));
}

std::uint64_t cloze_seed(std::string_view session_id) {
  return fnv1a(std::string(session_id) + "#cloze");
}

struct SessionStore::Entry {
  std::mutex mu;
  Session session;
  std::vector<Event> log;
};

// Working copy of a session plus the events an operation produced.
struct SessionStore::Pending {
  Session session;
  std::vector<Event> events;
  std::int64_t now = 0;

  void log(EventKind kind, json payload) {
    session.last_seq += 1;
    session.updated_at = now;
    events.push_back({session.id, session.last_seq, kind, std::move(payload), now});
  }

  void move_to(Phase to, json extra = json::object()) {
    extra["from"] = to_string(session.phase);
    extra["to"] = to_string(to);
    session.phase = to;
    log(EventKind::PhaseChange, std::move(extra));
  }
};

SessionStore::SessionStore(StoreConfig config, TextProvider& provider, const CodeEvaluator& evaluator,
                           Clock clock)
    : config_(std::move(config)), provider_(provider), evaluator_(evaluator), clock_(std::move(clock)) {
  std::optional<std::filesystem::path> cache_dir;
  if (config_.data_dir) {
    for (const char* sub : {"problems", "sessions", "events"}) {
      std::filesystem::create_directories(*config_.data_dir / sub);
    }
    cache_dir = *config_.data_dir / "cache";
  }
  cache_ = std::make_unique<ExplanationCache>(cache_dir);
  explainer_ = std::make_unique<Explainer>(provider_, *cache_);
  if (config_.data_dir) load_from_disk();
}

SessionStore::~SessionStore() = default;

void SessionStore::load_from_disk() {
  const auto& root = *config_.data_dir;
  for (const auto& f : std::filesystem::directory_iterator(root / "problems")) {
    if (f.path().extension() != ".json") continue;
    std::ifstream in(f.path());
    auto p = json::parse(in).get<Problem>();
    problems_[p.id] = std::move(p);
  }
  for (const auto& f : std::filesystem::directory_iterator(root / "sessions")) {
    if (f.path().extension() != ".json") continue;
    std::ifstream in(f.path());
    auto e = std::make_shared<Entry>();
    e->session = json::parse(in).get<Session>();
    std::ifstream log(root / "events" / (e->session.id + ".jsonl"));
    for (std::string line; std::getline(log, line);) {
      if (!line.empty()) e->log.push_back(event_from_line(line));
    }
    // A crash between the log append and the snapshot leaves the log ahead.
    e->log.erase(std::remove_if(e->log.begin(), e->log.end(),
                                [&](const Event& ev) { return ev.seq > e->session.last_seq; }),
                 e->log.end());
    sessions_[e->session.id] = std::move(e);
  }
}

Problem SessionStore::add_problem(const Problem& problem, bool verify_reference) {
  validate_problem_shape(problem);
  if (verify_reference) {
    const auto result = evaluate_code(problem.solution_source, problem.test_suite, evaluator_);
    if (!result.passed) {
      std::string detail;
      for (const auto& t : result.per_test) {
        if (!t.passed) {
          detail = "test " + std::to_string(t.index) + " observed: " + t.observed;
          break;
        }
      }
      throw Error(ErrorCode::InvalidProblem, "reference solution fails its own suite; " + detail);
    }
  }
  std::lock_guard lock(mu_);
  problems_[problem.id] = problem;
  if (config_.data_dir) {
    write_atomically(*config_.data_dir / "problems" / (problem.id + ".json"), dump_canonical(json(problem)));
  }
  return problem;
}

Problem SessionStore::get_problem(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = problems_.find(id);
  if (it == problems_.end()) throw Error(ErrorCode::NotFound, "no problem '" + id + "'");
  return it->second;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
  return it->second;
}

void SessionStore::commit(Entry& e, Session next, std::vector<Event> events) {
  if (config_.data_dir) {
    const auto& root = *config_.data_dir;
    if (!events.empty()) {
      std::ofstream log(root / "events" / (next.id + ".jsonl"), std::ios::app | std::ios::binary);
      for (const auto& ev : events) log << event_to_line(ev) << '\n';
      log.flush();
      if (!log) throw std::runtime_error("cannot append to event log of " + next.id);
    }
    write_atomically(root / "sessions" / (next.id + ".json"), dump_canonical(json(next)));
  }
  e.session = std::move(next);
  e.log.insert(e.log.end(), std::make_move_iterator(events.begin()), std::make_move_iterator(events.end()));
}

template <typename Fn>
auto SessionStore::mutate(const std::string& id, Fn&& fn) {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  Pending p{e->session, {}, clock_()};
  auto result = fn(p);
  commit(*e, std::move(p.session), std::move(p.events));
  return result;
}

Session SessionStore::create_session(const std::string& problem_id, const std::string& student_id,
                                     std::optional<std::string> id) {
  const auto problem = get_problem(problem_id);
  auto e = std::make_shared<Entry>();
  std::lock_guard entry_lock(e->mu);
  {
    std::lock_guard lock(mu_);
    if (!id) {
      do {
        id = random_session_id();
      } while (sessions_.count(*id));
    } else if (sessions_.count(*id)) {
      throw Error(ErrorCode::InvalidRequest, "session '" + *id + "' already exists");
    }
    e->session.id = *id;
    sessions_[*id] = e;
  }
  Pending p{e->session, {}, clock_()};
  p.session.problem_id = problem_id;
  p.session.student_id = student_id;
  p.session.created_at = p.now;
  p.log(EventKind::PhaseChange,
        {{"from", nullptr}, {"to", to_string(Phase::Writing)}, {"problem", problem}, {"student_id", student_id}});
  auto created = p.session;
  commit(*e, std::move(p.session), std::move(p.events));
  return created;
}

Session SessionStore::get_session(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return e->session;
}

std::vector<Event> SessionStore::events(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return e->log;
}

CodeEvalResult SessionStore::submit_code(const std::string& id, const std::string& code) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::Writing, "submit_code");
    const auto problem = get_problem(p.session.problem_id);
    const auto result = evaluate_code(code, problem.test_suite, evaluator_);
    p.session.latest_code = code;
    p.log(EventKind::CodeAttempt, {{"code", code}, {"result", result}});
    if (!result.passed) return result;

    p.move_to(Phase::Correct);
    if (p.session.used_parsons_help && p.session.solved_puzzle) {
      // The solved puzzle comes back, now paired with the menu question.
      const auto& solved = *p.session.solved_puzzle;
      const auto blocks = explainable_blocks(solved);
      const auto solution_text = render_program(solution_lines(solved));
      std::vector<BlockExplanation> explanations;
      for (const auto& b : blocks) {
        const auto paired = solved.distractors_paired_with(b.id);
        explanations.push_back(explainer_->generate_block_explanation(
            b, paired.empty() ? nullptr : paired.front(), solution_text));
      }
      p.session.cloze = explainer_->generate_cloze(blocks, explanations, cloze_seed(p.session.id));
      p.session.puzzle = solved;
      p.move_to(Phase::SelfExplanation, {{"cloze", *p.session.cloze}});
    } else {
      p.move_to(Phase::Done);
    }
    return result;
  });
}

HelpResult SessionStore::request_help(const std::string& id) {
  const auto outcome = mutate(id, [&](Pending& p) -> std::optional<HelpResult> {
    require_phase(p.session, Phase::Writing, "request_help");
    const auto problem = get_problem(p.session.problem_id);
    const auto solution = parse_source(problem.solution_source);
    const auto student = parse_source(p.session.latest_code);
    const int n = p.session.help_count + 1;
    auto cfg = config_.generation;
    cfg.seed = help_seed(p.session.id, n);
    p.session.help_count = n;

    ParsonsPuzzle puzzle;
    try {
      puzzle = generate_puzzle(align(student, solution), solution, student, cfg, problem.id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AlreadyCorrect) throw;
      p.log(EventKind::HelpRequested, {{"help_count", n}, {"outcome", "already_correct"}});
      return std::nullopt;
    }
    auto subgoals = explainer_->generate_subgoals(problem, explainable_blocks(puzzle));
    p.session.puzzle = puzzle;
    p.session.subgoals = subgoals;
    p.session.parsons_failures = 0;
    p.session.parsons_attempts = 0;
    p.session.merges_allowed = 0;
    p.session.used_parsons_help = true;
    p.session.solved_arrangement.reset();
    p.session.cloze.reset();
    p.log(EventKind::HelpRequested, {{"help_count", n},
                                     {"outcome", "puzzle"},
                                     {"puzzle_id", puzzle.puzzle_id},
                                     {"subgoals", subgoals}});
    p.move_to(Phase::ParsonsActive);
    return HelpResult{std::move(puzzle), std::move(subgoals)};
  });
  if (!outcome) throw Error(ErrorCode::AlreadyCorrect, "the latest code already matches the solution");
  return *outcome;
}

GradeResult SessionStore::submit_parsons(const std::string& id, const Arrangement& arr) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::ParsonsActive, "submit_parsons");
    auto& s = p.session;
    const auto result = grade_parsons(*s.puzzle, arr, s.parsons_attempts + 1);
    s.parsons_attempts += 1;
    p.log(EventKind::ParsonsAttempt, {{"arrangement", arr}, {"result", result}});
    if (result.correct) {
      s.solved_arrangement = arr;
      p.move_to(Phase::ParsonsSolved);
    } else {
      s.parsons_failures += 1;
      s.merges_allowed = std::max(0, std::max(0, s.parsons_failures - 2) - s.puzzle->merges_applied);
    }
    return result;
  });
}

ParsonsPuzzle SessionStore::request_merge(const std::string& id, const std::string& a, const std::string& b) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::ParsonsActive, "request_merge");
    auto& s = p.session;
    if (s.merges_allowed < 1) {
      throw Error(ErrorCode::MergeLocked, "merging unlocks after " + std::to_string(3) +
                                              " failed attempts; failures so far: " +
                                              std::to_string(s.parsons_failures));
    }
    auto merged = merge_blocks(*s.puzzle, a, b);
    std::string merged_id;
    for (const auto& blk : merged.blocks) {
      if (!s.puzzle->find_block(blk.id)) merged_id = blk.id;
    }
    s.puzzle = merged;
    s.merges_allowed -= 1;
    p.log(EventKind::Merge, {{"a", a}, {"b", b}, {"merged_block_id", merged_id}});
    return merged;
  });
}

std::string SessionStore::copy_solution(const std::string& id) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::ParsonsSolved, "copy_solution");
    auto& s = p.session;
    const auto code = render_program(expand_arrangement(*s.puzzle, *s.solved_arrangement));
    s.latest_code = code;
    s.solved_puzzle = std::move(s.puzzle);
    s.puzzle.reset();
    p.log(EventKind::CopySolution, {{"code", code}});
    p.move_to(Phase::Writing);
    return code;
  });
}

BlockExplanation SessionStore::explain_block(const std::string& id, const std::string& block_id) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::ParsonsSolved, "explain_block");
    const auto& puzzle = *p.session.puzzle;
    const Block* block = puzzle.find_block(block_id);
    if (!block) throw Error(ErrorCode::UnknownBlock, "no block '" + block_id + "' in this puzzle");
    const auto paired = puzzle.distractors_paired_with(block_id);
    auto e = explainer_->generate_block_explanation(*block, paired.empty() ? nullptr : paired.front(),
                                                    render_program(solution_lines(puzzle)));
    p.log(EventKind::ExplanationViewed, {{"target", "block"}, {"block_id", block_id}});
    return e;
  });
}

AtomExplanation SessionStore::explain_atom(const std::string& id, const std::string& block_id, int atom_index) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::ParsonsSolved, "explain_atom");
    const Block* block = p.session.puzzle->find_block(block_id);
    if (!block) throw Error(ErrorCode::UnknownBlock, "no block '" + block_id + "' in this puzzle");
    if (block->kind == BlockKind::Distractor) {
      throw Error(ErrorCode::DistractorNotExplainable, "distractor blocks are explained through their paired block");
    }
    auto e = explainer_->generate_atom_explanation(*block, atom_index);
    p.log(EventKind::ExplanationViewed,
          {{"target", "atom"}, {"block_id", block_id}, {"atom_index", atom_index}});
    return e;
  });
}

std::pair<ClozeQuestion, ParsonsPuzzle> SessionStore::self_explanation(const std::string& id) const {
  const auto s = get_session(id);
  require_phase(s, Phase::SelfExplanation, "self_explanation");
  return {*s.cloze, *s.puzzle};
}

SelfExplanationResult SessionStore::submit_self_explanation(const std::string& id,
                                                            const std::vector<int>& answers) {
  return mutate(id, [&](Pending& p) {
    require_phase(p.session, Phase::SelfExplanation, "submit_self_explanation");
    const auto grade = grade_cloze(*p.session.cloze, answers);
    p.log(EventKind::ClozeAnswered, {{"answers", answers}, {"grade", grade}});
    if (grade.correct) {
      p.session.puzzle.reset();
      p.move_to(Phase::Done);
    }
    return SelfExplanationResult{grade, p.session.phase};
  });
}

namespace {

// Answers each test from the result recorded for the current submission.
class RecordedEvaluator final : public CodeEvaluator {
 public:
  TestOutcome run_test(std::string_view, const TestCase&, int index) const override {
    if (index < 0 || static_cast<std::size_t>(index) >= current.per_test.size()) {
      throw Error(ErrorCode::InvalidRequest, "recorded result has no outcome for test " + std::to_string(index));
    }
    return current.per_test[static_cast<std::size_t>(index)];
  }
  CodeEvalResult current;
};

}  // namespace

Session replay_events(const std::vector<Event>& events) {
  if (events.empty() || events.front().kind != EventKind::PhaseChange ||
      !events.front().payload.contains("problem")) {
    throw Error(ErrorCode::InvalidRequest, "log must start with the session creation event");
  }
  const auto& first = events.front();
  const auto problem = first.payload.at("problem").get<Problem>();

  std::map<std::string, std::vector<std::string>> recorded;
  for (const auto& e : events) {
    if (e.kind == EventKind::HelpRequested && e.payload.contains("subgoals")) {
      recorded["subgoals.v1"].push_back(e.payload.at("subgoals").at("items").dump());
    }
    if (e.kind == EventKind::PhaseChange && e.payload.contains("cloze")) {
      recorded["cloze.v1"].push_back(e.payload.at("cloze").dump());
    }
  }
  ReplayProvider provider(std::move(recorded));
  RecordedEvaluator evaluator;
  std::int64_t now = first.ts;
  SessionStore store({}, provider, evaluator, [&now] { return now; });
  store.add_problem(problem, false);
  const auto& id = first.session_id;
  store.create_session(problem.id, first.payload.at("student_id").get<std::string>(), id);

  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto& pl = e.payload;
    now = e.ts;
    switch (e.kind) {
      case EventKind::PhaseChange:
        break;  // derived from the commands around it
      case EventKind::CodeAttempt:
        evaluator.current = pl.at("result").get<CodeEvalResult>();
        store.submit_code(id, pl.at("code").get<std::string>());
        break;
      case EventKind::HelpRequested:
        try {
          store.request_help(id);
        } catch (const Error& err) {
          if (err.code() != ErrorCode::AlreadyCorrect) throw;
        }
        break;
      case EventKind::ParsonsAttempt:
        store.submit_parsons(id, pl.at("arrangement").get<Arrangement>());
        break;
      case EventKind::Merge:
        store.request_merge(id, pl.at("a").get<std::string>(), pl.at("b").get<std::string>());
        break;
      case EventKind::CopySolution:
        store.copy_solution(id);
        break;
      case EventKind::ExplanationViewed:
        if (pl.at("target") == "atom") {
          store.explain_atom(id, pl.at("block_id").get<std::string>(), pl.at("atom_index").get<int>());
        } else {
          store.explain_block(id, pl.at("block_id").get<std::string>());
        }
        break;
      case EventKind::ClozeAnswered:
        store.submit_self_explanation(id, pl.at("answers").get<std::vector<int>>());
        break;
    }
  }
  if (store.events(id) != events) {
    throw Error(ErrorCode::InvalidRequest, "event log does not reproduce itself on replay");
  }
  return store.get_session(id);
}

}  // namespace scaffold
