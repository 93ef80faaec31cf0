#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scaffold/core_model.hpp"

namespace scaffold {

enum class GradeErrorKind { WrongBlock, WrongIndent, DistractorUsed, MissingBlock, ExtraBlock };

std::string_view to_string(GradeErrorKind kind) noexcept;
std::optional<GradeErrorKind> grade_error_kind_from_string(std::string_view name) noexcept;

struct GradeError {
  /// Answer-area position (index into Arrangement::placements).
  int position = 0;
  GradeErrorKind kind = GradeErrorKind::WrongBlock;

  bool operator==(const GradeError&) const = default;
};

struct GradeResult {
  bool correct = false;
  std::optional<GradeError> first_error;
  int attempt_number = 0;

  bool operator==(const GradeResult&) const = default;
};

/// Exact-match grading against the single reference solution. Only the
/// earliest deviation is reported.
GradeResult grade_parsons(const ParsonsPuzzle& puzzle, const Arrangement& arr, int attempt_number);

struct TestOutcome {
  int index = 0;
  bool passed = false;
  /// Observed stdout, the repr of the return value, or an error description.
  std::string observed;
  long duration_ms = 0;

  bool operator==(const TestOutcome&) const = default;
};

struct CodeEvalResult {
  bool passed = false;
  std::vector<TestOutcome> per_test;

  bool operator==(const CodeEvalResult&) const = default;
};

/// Runs one test case against submitted code. Implementations must not share
/// mutable state between calls; one evaluator may serve concurrent callers.
class CodeEvaluator {
 public:
  virtual ~CodeEvaluator() = default;
  /// Throws Error(EvaluatorUnavailable) if the interpreter cannot be used.
  /// Timeouts and crashes are reported through the outcome.
  virtual TestOutcome run_test(std::string_view code, const TestCase& test, int index) const = 0;
};

/// Spawns a Python 3 interpreter per test in an empty temporary directory.
class PythonEvaluator final : public CodeEvaluator {
 public:
  explicit PythonEvaluator(std::string interpreter = "python3");

  TestOutcome run_test(std::string_view code, const TestCase& test, int index) const override;
  bool available() const;

 private:
  std::string interpreter_;
};

/// Drops trailing whitespace on each line and a single trailing newline.
std::string normalize_output(std::string_view text);

CodeEvalResult evaluate_code(std::string_view code, std::span<const TestCase> suite,
                             const CodeEvaluator& evaluator);

}  // namespace scaffold
