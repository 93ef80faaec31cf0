#include "scaffold/json_io.hpp"

#include "scaffold/error.hpp"

namespace scaffold {

namespace {

template <typename T>
T enum_field(const json& j, const char* key,
             std::optional<T> (*parse)(std::string_view) noexcept) {
  const auto text = j.at(key).get<std::string>();
  if (auto value = parse(text)) return *value;
  throw Error(ErrorCode::InvalidRequest, std::string("bad value for '") + key + "': " + text);
}

std::string string_or(const json& j, const char* key, std::string fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<std::string>();
}

}  // namespace

void to_json(json& j, const Atom& atom) {
  j = json{{"text", atom.text},
           {"kind", std::string(to_string(atom.kind))},
           {"col_span", {atom.begin, atom.end}}};
}

void from_json(const json& j, Atom& atom) {
  atom.text = j.at("text").get<std::string>();
  atom.kind = enum_field<AtomKind>(j, "kind", atom_kind_from_string);
  const auto& span = j.at("col_span");
  atom.begin = span.at(0).get<std::size_t>();
  atom.end = span.at(1).get<std::size_t>();
}

void to_json(json& j, const SourceLine& line) {
  j = json{{"raw", line.raw},
           {"normalized", line.normalized},
           {"indent", line.indent},
           {"atoms", line.atoms}};
  if (line.unterminated_string) j["unterminated_string"] = true;
}

void from_json(const json& j, SourceLine& line) {
  line.normalized = j.at("normalized").get<std::string>();
  line.indent = j.at("indent").get<int>();
  line.raw = string_or(j, "raw", std::string(static_cast<std::size_t>(std::max(0, line.indent)) *
                                                 kIndentWidth, ' ') + line.normalized);
  line.unterminated_string = j.value("unterminated_string", false);
  if (j.contains("atoms")) {
    line.atoms = j.at("atoms").get<std::vector<Atom>>();
  } else {
    line.atoms = tokenize_atoms(line.normalized);
  }
}

void to_json(json& j, const ProgramLine& line) {
  j = json{{"text", line.text}, {"indent", line.indent}};
}

void from_json(const json& j, ProgramLine& line) {
  line.text = j.at("text").get<std::string>();
  line.indent = j.at("indent").get<int>();
}

void to_json(json& j, const TestCase& test) {
  j = json{{"mode", std::string(to_string(test.mode))},
           {"input", test.input},
           {"expected", test.expected},
           {"timeout_ms", test.timeout_ms}};
  if (!test.function_name.empty()) j["function_name"] = test.function_name;
}

void from_json(const json& j, TestCase& test) {
  test.mode = enum_field<TestMode>(j, "mode", test_mode_from_string);
  test.input = string_or(j, "input");
  if (!j.contains("expected") || j.at("expected").is_null()) {
    throw Error(ErrorCode::InvalidRequest, "test case has no expected value");
  }
  test.expected = j.at("expected").get<std::string>();
  test.timeout_ms = j.value("timeout_ms", kDefaultTestTimeoutMs);
  test.function_name = string_or(j, "function_name");
}

void to_json(json& j, const Problem& problem) {
  j = json{{"id", problem.id},
           {"statement", problem.statement},
           {"solution_source", problem.solution_source},
           {"test_suite", problem.test_suite},
           {"metadata", {{"author", problem.author}, {"title", problem.title}}}};
}

void from_json(const json& j, Problem& problem) {
  problem.id = string_or(j, "id");
  problem.statement = string_or(j, "statement");
  problem.solution_source = j.at("solution_source").get<std::string>();
  problem.test_suite = j.at("test_suite").get<std::vector<TestCase>>();
  if (const auto it = j.find("metadata"); it != j.end() && it->is_object()) {
    problem.author = string_or(*it, "author");
    problem.title = string_or(*it, "title");
  }
}

void to_json(json& j, const Block& block) {
  j = json{{"id", block.id},
           {"kind", std::string(to_string(block.kind))},
           {"lines", block.lines},
           {"solution_pos", block.solution_pos ? json(*block.solution_pos) : json(nullptr)},
           {"paired_with", block.paired_with ? json(*block.paired_with) : json(nullptr)}};
}

void from_json(const json& j, Block& block) {
  block.id = j.at("id").get<std::string>();
  block.kind = enum_field<BlockKind>(j, "kind", block_kind_from_string);
  block.lines = j.at("lines").get<std::vector<SourceLine>>();
  const auto pos = j.find("solution_pos");
  block.solution_pos =
      pos == j.end() || pos->is_null() ? std::nullopt : std::optional<int>(pos->get<int>());
  const auto paired = j.find("paired_with");
  block.paired_with = paired == j.end() || paired->is_null()
                          ? std::nullopt
                          : std::optional<std::string>(paired->get<std::string>());
}

void to_json(json& j, const ParsonsPuzzle& puzzle) {
  j = json{{"puzzle_id", puzzle.puzzle_id},
           {"problem_id", puzzle.problem_id},
           {"blocks", puzzle.blocks},
           {"tray_order", puzzle.tray_order},
           {"solution_line_count", puzzle.solution_line_count},
           {"seed", puzzle.seed},
           {"merges_applied", puzzle.merges_applied}};
}

void from_json(const json& j, ParsonsPuzzle& puzzle) {
  puzzle.puzzle_id = j.at("puzzle_id").get<std::string>();
  puzzle.problem_id = string_or(j, "problem_id");
  puzzle.blocks = j.at("blocks").get<std::vector<Block>>();
  puzzle.tray_order = j.at("tray_order").get<std::vector<std::string>>();
  puzzle.solution_line_count = j.at("solution_line_count").get<int>();
  puzzle.seed = j.value("seed", std::uint64_t{0});
  puzzle.merges_applied = j.value("merges_applied", 0);
}

void to_json(json& j, const Placement& placement) {
  j = json{{"block_id", placement.block_id}, {"indent", placement.indent}};
}

void from_json(const json& j, Placement& placement) {
  placement.block_id = j.at("block_id").get<std::string>();
  placement.indent = j.at("indent").get<int>();
}

void to_json(json& j, const Arrangement& arr) { j = arr.placements; }

void from_json(const json& j, Arrangement& arr) {
  const json& list = j.is_object() ? j.at("placements") : j;
  arr.placements = list.get<std::vector<Placement>>();
}

void to_json(json& j, const Alignment& alignment) {
  json matched = json::array();
  for (const auto& [s, t] : alignment.matched) matched.push_back({s, t});
  j = json{{"matched", matched},
           {"incorrect_student", alignment.incorrect_student},
           {"unmatched_solution", alignment.unmatched_solution}};
}

void to_json(json& j, const Violation& violation) {
  j = json{{"invariant", violation.invariant},
           {"ids", violation.ids},
           {"detail", violation.detail}};
}

void to_json(json& j, const GradeResult& result) {
  j = json{{"correct", result.correct}, {"attempt_number", result.attempt_number}};
  if (result.first_error) {
    j["first_error"] = {{"position", result.first_error->position},
                        {"kind", std::string(to_string(result.first_error->kind))}};
  } else {
    j["first_error"] = nullptr;
  }
}

void from_json(const json& j, GradeResult& result) {
  result.correct = j.at("correct").get<bool>();
  result.attempt_number = j.value("attempt_number", 0);
  const auto it = j.find("first_error");
  if (it == j.end() || it->is_null()) {
    result.first_error.reset();
  } else {
    result.first_error = GradeError{
        it->at("position").get<int>(),
        enum_field<GradeErrorKind>(*it, "kind", grade_error_kind_from_string)};
  }
}

void to_json(json& j, const TestOutcome& outcome) {
  j = json{{"test_index", outcome.index},
           {"passed", outcome.passed},
           {"observed", outcome.observed},
           {"duration_ms", outcome.duration_ms}};
}

void from_json(const json& j, TestOutcome& outcome) {
  outcome.index = j.at("test_index").get<int>();
  outcome.passed = j.at("passed").get<bool>();
  outcome.observed = string_or(j, "observed");
  outcome.duration_ms = j.value("duration_ms", 0L);
}

void to_json(json& j, const CodeEvalResult& result) {
  j = json{{"passed", result.passed}, {"per_test", result.per_test}};
}

void from_json(const json& j, CodeEvalResult& result) {
  result.passed = j.at("passed").get<bool>();
  result.per_test = j.at("per_test").get<std::vector<TestOutcome>>();
}

std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

}  // namespace scaffold
