// Offline author tooling. Every subcommand writes one JSON document to
// stdout; failures go to stderr as {code, message, http_status}.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scaffold/api.hpp"
#include "scaffold/code_align.hpp"
#include "scaffold/error.hpp"
#include "scaffold/explain.hpp"
#include "scaffold/grader.hpp"
#include "scaffold/json_io.hpp"
#include "scaffold/provider.hpp"
#include "scaffold/puzzle_gen.hpp"
#include "scaffold/session.hpp"

namespace fs = std::filesystem;
using namespace scaffold;

namespace {

// 0 ok, 1 negative verdict, 2 usage; domain errors are 10 + their index.
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
int exit_code_for(ErrorCode code) { return 10 + static_cast<int>(code); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

void emit(const json& j) { std::cout << dump_canonical(j) << '\n'; }

int generate(const std::string& solution_path, const std::string& attempt_path, std::uint64_t seed,
             const std::string& problem_id) {
  const auto solution = parse_source(read_file(solution_path));
  const auto student = parse_source(read_file(attempt_path));
  GenConfig cfg;
  cfg.seed = seed;
  const auto id = problem_id.empty() ? fs::path(solution_path).stem().string() : problem_id;
  emit(generate_puzzle(align(student, solution), solution, student, cfg, id));
  return 0;
}

int grade(const std::string& puzzle_path, const std::string& arrangement_path) {
  const auto puzzle = read_json(puzzle_path).get<ParsonsPuzzle>();
  const json raw = read_json(arrangement_path);
  const auto arr = (raw.is_object() && raw.contains("arrangement") ? raw.at("arrangement") : raw).get<Arrangement>();
  const auto result = grade_parsons(puzzle, arr, 1);
  emit(result);
  return result.correct ? 0 : kExitVerdict;
}

int explain(const std::string& puzzle_path) {
  const auto puzzle = read_json(puzzle_path).get<ParsonsPuzzle>();
  NullProvider provider;
  ExplanationCache cache;
  Explainer explainer(provider, cache);

  std::vector<Block> blocks;
  for (const auto& b : puzzle.blocks) {
    if (b.kind != BlockKind::Distractor) blocks.push_back(b);
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const Block& a, const Block& b) { return *a.solution_pos < *b.solution_pos; });
  const auto program = render_program(solution_lines(puzzle));
  Problem problem;
  problem.id = puzzle.problem_id;
  problem.solution_source = program;

  ExplanationBundle bundle;
  bundle.subgoals = explainer.generate_subgoals(problem, blocks);
  for (const auto& b : blocks) {
    const auto paired = puzzle.distractors_paired_with(b.id);
    bundle.blocks.push_back(explainer.generate_block_explanation(b, paired.empty() ? nullptr : paired.front(), program));
    for (int i = 0; i < static_cast<int>(block_atoms(b).size()); ++i) {
      bundle.atoms.push_back(explainer.generate_atom_explanation(b, i));
    }
  }
  emit(bundle);
  return 0;
}

int replay(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read '" + log_path + "'");
  std::vector<Event> events;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) events.push_back(event_from_line(line));
  }
  emit(replay_events(events));
  return 0;
}

int validate_problem(const std::string& problem_path, const std::string& interpreter) {
  const auto problem = read_json(problem_path).get<Problem>();
  validate_problem_shape(problem);
  const auto result = evaluate_code(problem.solution_source, problem.test_suite, PythonEvaluator(interpreter));
  emit(result);
  if (!result.passed) {
    std::cerr << api_error_body(ErrorCode::InvalidProblem, "reference solution fails its own suite").dump() << '\n';
    return exit_code_for(ErrorCode::InvalidProblem);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized Parsons puzzle tooling"};
  app.require_subcommand(1);

  std::string solution, attempt, problem_id, puzzle, arrangement, log, problem;
  std::string interpreter = "python3";
  std::uint64_t seed = 0;
  bool fallback = false;

  auto* gen = app.add_subcommand("generate", "Build a puzzle from a solution and a student attempt");
  gen->add_option("--solution", solution)->required()->check(CLI::ExistingFile);
  gen->add_option("--attempt", attempt)->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Shuffle seed");
  gen->add_option("--problem-id", problem_id, "Defaults to the solution file stem");

  auto* grd = app.add_subcommand("grade", "Grade an arrangement; exit 0 iff correct");
  grd->add_option("--puzzle", puzzle)->required()->check(CLI::ExistingFile);
  grd->add_option("--arrangement", arrangement)->required()->check(CLI::ExistingFile);

  auto* exp = app.add_subcommand("explain", "Render every explanation for a puzzle");
  exp->add_option("--puzzle", puzzle)->required()->check(CLI::ExistingFile);
  exp->add_flag("--fallback", fallback, "Use the offline fallback generator (the only mode)");

  auto* rep = app.add_subcommand("replay", "Rebuild a session from its event log");
  rep->add_option("--log", log)->required()->check(CLI::ExistingFile);

  auto* val = app.add_subcommand("validate-problem", "Run a problem's reference solution against its suite");
  val->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  val->add_option("--python", interpreter, "Interpreter to run tests with");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return generate(solution, attempt, seed, problem_id);
    if (*grd) return grade(puzzle, arrangement);
    if (*exp) return explain(puzzle);
    if (*rep) return replay(log);
    if (*val) return validate_problem(problem, interpreter);
  } catch (const Error& e) {
    std::cerr << api_error_body(e.code(), e.what()).dump() << '\n';
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << api_error_body(ErrorCode::InvalidRequest, e.what()).dump() << '\n';
    return exit_code_for(ErrorCode::InvalidRequest);
  } catch (const std::exception& e) {
    std::cerr << json{{"code", "internal"}, {"message", e.what()}, {"http_status", 500}}.dump() << '\n';
    return 1;
  }
  return kExitUsage;
}
