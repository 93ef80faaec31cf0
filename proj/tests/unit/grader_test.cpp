#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "scaffold/error.hpp"
#include "scaffold/grader.hpp"
#include "scaffold/puzzle_gen.hpp"
#include "scaffold/subprocess.hpp"

namespace scaffold {
namespace {

ParsonsPuzzle total_puzzle() {
  const auto solution = testing::total_solution();
  const auto student = testing::total_student();
  return generate_puzzle(align(student, solution), solution, student, {3, 0.3, 7}, "total");
}

TEST(GradeParsons, CanonicalArrangementIsCorrect) {
  const auto puzzle = total_puzzle();
  const auto result = grade_parsons(puzzle, canonical_arrangement(puzzle), 1);
  EXPECT_TRUE(result.correct);
  EXPECT_FALSE(result.first_error);
  EXPECT_EQ(result.attempt_number, 1);
}

TEST(GradeParsons, WrongIndentReportedAtPosition) {
  const auto puzzle = total_puzzle();
  auto arr = canonical_arrangement(puzzle);
  arr.placements[1].indent += 1;
  const auto result = grade_parsons(puzzle, arr, 2);
  EXPECT_FALSE(result.correct);
  ASSERT_TRUE(result.first_error);
  EXPECT_EQ(result.first_error->kind, GradeErrorKind::WrongIndent);
  EXPECT_EQ(result.first_error->position, 1);
}

TEST(GradeParsons, DistractorMissingAndExtra) {
  const auto puzzle = total_puzzle();
  const auto canonical = canonical_arrangement(puzzle);

  auto with_distractor = canonical;
  for (const auto& b : puzzle.blocks) {
    if (b.kind == BlockKind::Distractor && *b.paired_with == canonical.placements[2].block_id) {
      // "return s" at indent 1 is textually right but still a distractor
      with_distractor.placements[2] = {b.id, 1};
    }
  }
  ASSERT_NE(with_distractor, canonical);
  auto result = grade_parsons(puzzle, with_distractor, 1);
  EXPECT_EQ(result.first_error, (GradeError{2, GradeErrorKind::DistractorUsed}));

  auto prefix = canonical;
  prefix.placements.pop_back();
  result = grade_parsons(puzzle, prefix, 1);
  EXPECT_EQ(result.first_error, (GradeError{2, GradeErrorKind::MissingBlock}));

  auto extra = canonical;
  for (const auto& b : puzzle.blocks) {
    if (b.kind == BlockKind::Distractor && b.lines[0].normalized == "s = 1") {
      extra.placements.push_back({b.id, 1});
    }
  }
  result = grade_parsons(puzzle, extra, 1);
  EXPECT_EQ(result.first_error, (GradeError{3, GradeErrorKind::DistractorUsed}));

  auto swapped = canonical;
  std::swap(swapped.placements[0], swapped.placements[1]);
  result = grade_parsons(puzzle, swapped, 1);
  EXPECT_EQ(result.first_error, (GradeError{0, GradeErrorKind::WrongBlock}));
}

TEST(GradeParsons, ExhaustiveEnumerationFindsExactlyOneSolution) {
  const auto puzzle = total_puzzle();
  ASSERT_EQ(puzzle.count(BlockKind::Movable) + puzzle.count(BlockKind::Distractor), 5u);
  const auto expected = solution_lines(puzzle);
  const auto indents = testing::solution_indent_set(puzzle);
  int correct = 0;
  long total = 0;
  testing::for_each_arrangement(puzzle, indents, [&](const Arrangement& arr) {
    ++total;
    bool uses_distractor = false;
    for (const auto& p : arr.placements) {
      uses_distractor |= puzzle.find_block(p.block_id)->kind == BlockKind::Distractor;
    }
    const bool oracle = !uses_distractor && testing::slot_fill_expand(puzzle, arr) == expected;
    const auto result = grade_parsons(puzzle, arr, 1);
    ASSERT_EQ(result.correct, oracle);
    ASSERT_EQ(result.correct, !result.first_error.has_value());
    correct += oracle ? 1 : 0;
  });
  EXPECT_EQ(correct, 1);
  EXPECT_GT(total, 1000);
}

TEST(GradeParsons, AttemptNumberIsOnlyEchoed) {
  const auto puzzle = total_puzzle();
  auto arr = canonical_arrangement(puzzle);
  std::swap(arr.placements[0], arr.placements[2]);
  auto a = grade_parsons(puzzle, arr, 1);
  auto b = grade_parsons(puzzle, arr, 7);
  EXPECT_EQ(b.attempt_number, 7);
  b.attempt_number = 1;
  EXPECT_EQ(a, b);
}

TEST(NormalizeOutput, TrimsTrailingWhitespaceAndOneNewline) {
  EXPECT_EQ(normalize_output("5\n"), "5");
  EXPECT_EQ(normalize_output("5"), "5");
  EXPECT_EQ(normalize_output("a  \nb\t\n"), "a\nb");
  EXPECT_EQ(normalize_output("5\n\n"), "5\n");
  EXPECT_EQ(normalize_output("x\r\n"), "x");
}

class FakeEvaluator : public CodeEvaluator {
 public:
  TestOutcome run_test(std::string_view code, const TestCase& test, int index) const override {
    return {index, code == test.expected, std::string(code), 0};
  }
};

TEST(EvaluateCode, PassedIffAllTestsPass) {
  const std::vector<TestCase> suite = {{TestMode::StdinStdout, "", "a", 100, ""},
                                       {TestMode::StdinStdout, "", "b", 100, ""}};
  const auto result = evaluate_code("a", suite, FakeEvaluator{});
  EXPECT_FALSE(result.passed);
  ASSERT_EQ(result.per_test.size(), 2u);
  EXPECT_TRUE(result.per_test[0].passed);
  EXPECT_FALSE(result.per_test[1].passed);
  EXPECT_EQ(result.per_test[1].index, 1);
}

class PythonEvaluatorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!evaluator.available()) GTEST_SKIP() << "python3 not available";
  }
  PythonEvaluator evaluator;
};

TEST_F(PythonEvaluatorTest, ReferenceSolutionPassesItsOwnSuite) {
  const std::vector<TestCase> suite = {
      {TestMode::FunctionCall, "[[1, 2, 3]]", "6", 2000, "total"},
      {TestMode::FunctionCall, "[[]]", "0", 2000, ""},
  };
  const auto result = evaluate_code(testing::total_source(), suite, evaluator);
  EXPECT_TRUE(result.passed) << result.per_test[0].observed;
  EXPECT_EQ(result.per_test[0].observed, "6");
}

TEST_F(PythonEvaluatorTest, StdoutTrailingNewlineTolerance) {
  const std::vector<TestCase> suite = {{TestMode::StdinStdout, "", "5", 2000, ""}};
  EXPECT_TRUE(evaluate_code("print(5)\n", suite, evaluator).passed);
  const std::vector<TestCase> echo = {{TestMode::StdinStdout, "3\n4\n", "7", 2000, ""}};
  EXPECT_TRUE(evaluate_code("a = int(input())\nb = int(input())\nprint(a + b)\n", echo, evaluator)
                  .passed);
}

TEST_F(PythonEvaluatorTest, EmptyProgramFailsWithEmptyOutput) {
  const std::vector<TestCase> suite = {{TestMode::StdinStdout, "", "5", 2000, ""}};
  const auto result = evaluate_code("", suite, evaluator);
  EXPECT_FALSE(result.passed);
  EXPECT_EQ(result.per_test[0].observed, "");
}

TEST_F(PythonEvaluatorTest, TimeoutAndCrashAreRecordedNotThrown) {
  const std::vector<TestCase> slow = {{TestMode::StdinStdout, "", "x", 300, ""}};
  auto result = evaluate_code("while True:\n    pass\n", slow, evaluator);
  EXPECT_FALSE(result.passed);
  EXPECT_NE(result.per_test[0].observed.find("timeout"), std::string::npos);
  EXPECT_LT(result.per_test[0].duration_ms, 2000);

  const std::vector<TestCase> call = {{TestMode::FunctionCall, "[[1]]", "1", 2000, "total"}};
  result = evaluate_code("def total(nums):\n    return nums[5]\n", call, evaluator);
  EXPECT_FALSE(result.passed);
  EXPECT_NE(result.per_test[0].observed.find("IndexError"), std::string::npos);
}

TEST_F(PythonEvaluatorTest, FunctionCallComparesRepr) {
  const std::vector<TestCase> suite = {{TestMode::FunctionCall, "['ab']", "'ba'", 2000, ""}};
  EXPECT_TRUE(evaluate_code("def rev(s):\n    print('noise')\n    return s[::-1]\n", suite, evaluator)
                  .passed);
  EXPECT_FALSE(evaluate_code("def rev(s):\n    return s\n", suite, evaluator).passed);
}

TEST(PythonEvaluatorMissing, ThrowsEvaluatorUnavailable) {
  PythonEvaluator missing("definitely-not-an-interpreter-xyz");
  const std::vector<TestCase> suite = {{TestMode::StdinStdout, "", "5", 100, ""}};
  try {
    evaluate_code("print(5)", suite, missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EvaluatorUnavailable);
  }
}

}  // namespace
}  // namespace scaffold
