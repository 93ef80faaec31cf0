#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "scaffold/error.hpp"
#include "scaffold/json_io.hpp"
#include "scaffold/puzzle_gen.hpp"

namespace scaffold {
namespace {

using testing::make_lines;

ParsonsPuzzle total_puzzle(std::uint64_t seed = 11) {
  const auto solution = testing::total_solution();
  const auto student = testing::total_student();
  return generate_puzzle(align(student, solution), solution, student, {3, 0.3, seed}, "total");
}

ParsonsPuzzle all_movable_puzzle(int lines, std::uint64_t seed = 5) {
  std::vector<std::pair<std::string, int>> spec;
  for (int i = 0; i < lines; ++i) spec.push_back({"x" + std::to_string(i) + " = " + std::to_string(i), 0});
  const auto solution = make_lines(spec);
  return generate_puzzle(align({}, solution), solution, {}, {3, 0.3, seed}, "p");
}

TEST(ExpandArrangement, NoMovableBlocksGivesFixedLines) {
  ParsonsPuzzle puzzle;
  puzzle.solution_line_count = 2;
  const auto lines = make_lines({{"a = 1", 0}, {"print(a)", 0}});
  puzzle.blocks = {{"f1", {lines[1]}, BlockKind::Fixed, 1, {}},
                   {"f0", {lines[0]}, BlockKind::Fixed, 0, {}}};
  const auto program = expand_arrangement(puzzle, {});
  ASSERT_EQ(program.size(), 2u);
  EXPECT_EQ(program[0], (ProgramLine{"a = 1", 0}));
  EXPECT_EQ(program[1], (ProgramLine{"print(a)", 0}));
}

TEST(ExpandArrangement, CanonicalArrangementReproducesSolution) {
  const auto puzzle = total_puzzle();
  EXPECT_EQ(expand_arrangement(puzzle, canonical_arrangement(puzzle)), solution_lines(puzzle));
  std::vector<ProgramLine> expected;
  for (const auto& line : testing::total_solution()) expected.push_back(key_of(line));
  EXPECT_EQ(solution_lines(puzzle), expected);
}

TEST(ExpandArrangement, TranspositionDiffersAndMatchesSlotOracle) {
  const auto puzzle = total_puzzle();
  ASSERT_EQ(puzzle.count(BlockKind::Movable), 3u);
  const auto canonical = canonical_arrangement(puzzle);
  for (std::size_t i = 0; i + 1 < canonical.placements.size(); ++i) {
    auto swapped = canonical;
    std::swap(swapped.placements[i], swapped.placements[i + 1]);
    const auto program = expand_arrangement(puzzle, swapped);
    EXPECT_NE(program, solution_lines(puzzle));
    EXPECT_EQ(program, testing::slot_fill_expand(puzzle, swapped));
  }
}

TEST(ExpandArrangement, AgreesWithSlotOracleOnAllArrangements) {
  const auto puzzle = total_puzzle();
  testing::for_each_arrangement(puzzle, {0, 1, 2}, [&](const Arrangement& arr) {
    ASSERT_EQ(expand_arrangement(puzzle, arr), testing::slot_fill_expand(puzzle, arr));
  });
}

TEST(ExpandArrangement, RejectsUnknownAndDuplicateIds) {
  const auto puzzle = total_puzzle();
  const auto& id = puzzle.tray_order.front();
  try {
    expand_arrangement(puzzle, {{{"nope", 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownBlock);
  }
  try {
    expand_arrangement(puzzle, {{{id, 0}, {id, 1}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateBlock);
  }
  // fixed blocks are implicit and may not be placed
  const auto fixed = std::find_if(puzzle.blocks.begin(), puzzle.blocks.end(),
                                  [](const Block& b) { return b.kind == BlockKind::Fixed; });
  EXPECT_THROW(expand_arrangement(puzzle, {{{fixed->id, 0}}}), Error);
}

TEST(ExpandArrangement, InjectiveOverDistinctSequences) {
  const auto puzzle = all_movable_puzzle(4);
  std::set<std::vector<ProgramLine>> seen;
  std::size_t count = 0;
  testing::for_each_arrangement(puzzle, {0}, [&](const Arrangement& arr) {
    seen.insert(expand_arrangement(puzzle, arr));
    ++count;
  });
  EXPECT_EQ(seen.size(), count);
}

TEST(CheckPuzzleInvariants, GeneratedPuzzleIsClean) {
  EXPECT_TRUE(check_puzzle_invariants(total_puzzle()).empty());
  EXPECT_TRUE(check_puzzle_invariants(all_movable_puzzle(6)).empty());
}

TEST(CheckPuzzleInvariants, DoubleCoverage) {
  auto puzzle = total_puzzle();
  auto copy = *puzzle.movable_in_solution_order().front();
  copy.id = "dup";
  puzzle.blocks.push_back(copy);
  puzzle.tray_order.push_back("dup");
  const auto violations = check_puzzle_invariants(puzzle);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].invariant, "double coverage");
  EXPECT_NE(std::find(violations[0].ids.begin(), violations[0].ids.end(), "dup"),
            violations[0].ids.end());
}

TEST(CheckPuzzleInvariants, TrayIncomplete) {
  auto puzzle = total_puzzle();
  const auto distractor = std::find_if(puzzle.blocks.begin(), puzzle.blocks.end(),
                                       [](const Block& b) { return b.kind == BlockKind::Distractor; });
  ASSERT_NE(distractor, puzzle.blocks.end());
  std::erase(puzzle.tray_order, distractor->id);
  const auto violations = check_puzzle_invariants(puzzle);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].invariant, "tray incomplete");
  EXPECT_EQ(violations[0].ids, std::vector<std::string>{distractor->id});
}

TEST(CheckPuzzleInvariants, FlagsSolutionOrderedTrayAndBadPairing) {
  auto puzzle = all_movable_puzzle(3);
  std::vector<std::string> ordered;
  for (const Block* b : puzzle.movable_in_solution_order()) ordered.push_back(b->id);
  puzzle.tray_order = ordered;
  auto violations = check_puzzle_invariants(puzzle);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].invariant, "tray in solution order");

  auto paired = total_puzzle();
  for (auto& b : paired.blocks) {
    if (b.kind == BlockKind::Distractor) b.paired_with = "missing";
  }
  violations = check_puzzle_invariants(paired);
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations[0].invariant, "bad pairing");
}

TEST(CheckPuzzleInvariants, UncoveredLine) {
  auto puzzle = total_puzzle();
  puzzle.solution_line_count += 1;
  const auto violations = check_puzzle_invariants(puzzle);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].invariant, "uncovered line");
}

TEST(ProblemShape, RejectsEmptySolutionAndSuite) {
  Problem p{"p1", "", "# only a comment\n\n", {TestCase{}}, "", ""};
  EXPECT_THROW(validate_problem_shape(p), Error);
  p.solution_source = "print(1)\n";
  p.test_suite.clear();
  EXPECT_THROW(validate_problem_shape(p), Error);
  p.test_suite.push_back({TestMode::StdinStdout, "", "1", 0, ""});
  EXPECT_THROW(validate_problem_shape(p), Error);
  p.test_suite.back().timeout_ms = 100;
  EXPECT_NO_THROW(validate_problem_shape(p));
}

TEST(RenderProgram, FourSpacesPerLevel) {
  EXPECT_EQ(render_program({{"def f():", 0}, {"return 1", 1}}), "def f():\n    return 1\n");
}

// Round trip over randomized puzzles rather than a matrix of hand cases.
TEST(PuzzleJson, RoundTripPreservesValue) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto puzzle = total_puzzle(rng());
    const json encoded = puzzle;
    const auto decoded = encoded.get<ParsonsPuzzle>();
    EXPECT_EQ(decoded, puzzle);
    EXPECT_EQ(json(decoded).dump(), encoded.dump());
  }
  Problem problem{"p", "Sum", testing::total_source(),
                  {{TestMode::FunctionCall, "[[1, 2]]", "3", 500, "total"}}, "a", "t"};
  EXPECT_EQ(json(problem).get<Problem>(), problem);
  Arrangement arr{{{"b1", 0}, {"b2", 2}}};
  EXPECT_EQ(json(arr).get<Arrangement>(), arr);
  EXPECT_EQ(json::parse(R"({"placements":[{"block_id":"b1","indent":0}]})").get<Arrangement>(),
            (Arrangement{{{"b1", 0}}}));
}

}  // namespace
}  // namespace scaffold
