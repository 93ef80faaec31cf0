#include "scaffold/grader.hpp"

#include <fstream>

#include "scaffold/error.hpp"
#include "scaffold/subprocess.hpp"

namespace scaffold {

namespace {

constexpr std::pair<GradeErrorKind, std::string_view> kGradeErrorKinds[] = {
    {GradeErrorKind::WrongBlock, "wrong-block"},
    {GradeErrorKind::WrongIndent, "wrong-indent"},
    {GradeErrorKind::DistractorUsed, "distractor-used"},
    {GradeErrorKind::MissingBlock, "missing-block"},
    {GradeErrorKind::ExtraBlock, "extra-block"},
};

// Runs the submission in a fresh namespace, calls the target function and
// writes repr(result) and repr(expected) to result.txt.
constexpr std::string_view kFunctionHarness = R"PY(import ast, sys
src = open("main.py", encoding="utf-8").read()
name = sys.argv[1]
if not name:
    for node in ast.parse(src).body:
        if isinstance(node, ast.FunctionDef):
            name = node.name
            break
ns = {"__name__": "__submission__"}
exec(compile(src, "main.py", "exec"), ns)
if not name or name not in ns:
    raise SystemExit("no function to call")
args = ast.literal_eval(open("args.txt", encoding="utf-8").read())
result = ns[name](*args)
raw_expected = open("expected.txt", encoding="utf-8").read()
try:
    expected = repr(ast.literal_eval(raw_expected))
except Exception:
    expected = raw_expected.strip()
with open("result.txt", "w", encoding="utf-8") as out:
    out.write(repr(result) + "\n" + expected)
)PY";

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string last_line(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  const auto nl = text.rfind('\n');
  return std::string(nl == std::string_view::npos ? text : text.substr(nl + 1));
}

std::string failure_description(const ProcessResult& run, const TestCase& test) {
  if (run.timed_out) return "timeout after " + std::to_string(test.timeout_ms) + " ms";
  const std::string detail = last_line(run.err);
  if (run.signal) return "crashed with signal " + std::to_string(*run.signal);
  return "error: " + (detail.empty() ? "exit code " + std::to_string(run.exit_code) : detail);
}

}  // namespace

std::string_view to_string(GradeErrorKind kind) noexcept {
  for (const auto& [k, name] : kGradeErrorKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<GradeErrorKind> grade_error_kind_from_string(std::string_view name) noexcept {
  for (const auto& [k, text] : kGradeErrorKinds) {
    if (text == name) return k;
  }
  return std::nullopt;
}

GradeResult grade_parsons(const ParsonsPuzzle& puzzle, const Arrangement& arr,
                          int attempt_number) {
  const auto program = expand_arrangement_detailed(puzzle, arr);
  const auto expected = solution_lines(puzzle);

  GradeResult result;
  result.attempt_number = attempt_number;
  int last_placement = 0;
  for (std::size_t k = 0; k < program.size(); ++k) {
    const auto& line = program[k];
    if (line.placement >= 0) last_placement = line.placement;
    const int position = last_placement;
    if (line.kind == BlockKind::Distractor) {
      result.first_error = GradeError{position, GradeErrorKind::DistractorUsed};
    } else if (k >= expected.size()) {
      result.first_error = GradeError{position, GradeErrorKind::ExtraBlock};
    } else if (line.line.text != expected[k].text) {
      result.first_error = GradeError{position, GradeErrorKind::WrongBlock};
    } else if (line.line.indent != expected[k].indent) {
      result.first_error = GradeError{position, GradeErrorKind::WrongIndent};
    }
    if (result.first_error) return result;
  }
  if (program.size() < expected.size()) {
    result.first_error =
        GradeError{static_cast<int>(arr.placements.size()), GradeErrorKind::MissingBlock};
    return result;
  }
  result.correct = true;
  return result;
}

std::string normalize_output(std::string_view text) {
  std::string out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    const bool last = end == std::string_view::npos;
    if (last) end = text.size();
    auto line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
      line.remove_suffix(1);
    }
    out += line;
    if (last) break;
    out += '\n';
    start = end + 1;
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

PythonEvaluator::PythonEvaluator(std::string interpreter) : interpreter_(std::move(interpreter)) {}

bool PythonEvaluator::available() const { return find_executable(interpreter_).has_value(); }

TestOutcome PythonEvaluator::run_test(std::string_view code, const TestCase& test,
                                      int index) const {
  const auto exe = find_executable(interpreter_);
  if (!exe) {
    throw Error(ErrorCode::EvaluatorUnavailable, "interpreter '" + interpreter_ + "' not found");
  }
  TempDir dir;
  write_file(dir.path() / "main.py", code);
  const auto timeout = std::chrono::milliseconds(test.timeout_ms);

  TestOutcome outcome;
  outcome.index = index;
  if (test.mode == TestMode::StdinStdout) {
    const auto run = run_process({exe->string(), "-I", "main.py"}, test.input, dir.path(), timeout);
    outcome.duration_ms = run.duration_ms;
    if (run.timed_out || run.signal || run.exit_code != 0) {
      outcome.observed = run.out.empty() ? failure_description(run, test)
                                         : run.out + "\n" + failure_description(run, test);
      return outcome;
    }
    outcome.observed = run.out;
    outcome.passed = normalize_output(run.out) == normalize_output(test.expected);
    return outcome;
  }

  write_file(dir.path() / "harness.py", kFunctionHarness);
  write_file(dir.path() / "args.txt", test.input.empty() ? "[]" : test.input);
  write_file(dir.path() / "expected.txt", test.expected);
  const auto run =
      run_process({exe->string(), "-I", "harness.py", test.function_name}, "", dir.path(), timeout);
  outcome.duration_ms = run.duration_ms;
  if (run.timed_out || run.signal || run.exit_code != 0) {
    outcome.observed = failure_description(run, test);
    return outcome;
  }
  const std::string report = read_file(dir.path() / "result.txt");
  const auto nl = report.find('\n');
  outcome.observed = report.substr(0, nl);
  outcome.passed = nl != std::string::npos && report.substr(nl + 1) == outcome.observed;
  return outcome;
}

CodeEvalResult evaluate_code(std::string_view code, std::span<const TestCase> suite,
                             const CodeEvaluator& evaluator) {
  CodeEvalResult result;
  result.passed = true;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    auto outcome = evaluator.run_test(code, suite[i], static_cast<int>(i));
    result.passed = result.passed && outcome.passed;
    result.per_test.push_back(std::move(outcome));
  }
  if (suite.empty()) result.passed = false;
  return result;
}

}  // namespace scaffold
