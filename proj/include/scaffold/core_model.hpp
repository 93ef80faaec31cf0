#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scaffold {

/// Number of spaces that make up one indentation level.
inline constexpr int kIndentWidth = 4;

enum class AtomKind {
  Keyword,
  Identifier,
  NumberLiteral,
  StringLiteral,
  Operator,
  Punctuation,
};

std::string_view to_string(AtomKind kind) noexcept;
std::optional<AtomKind> atom_kind_from_string(std::string_view name) noexcept;

/// One lexical element of a line. `begin`/`end` are a half-open byte range
/// into the line's normalized text.
struct Atom {
  std::string text;
  AtomKind kind = AtomKind::Punctuation;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Atom&) const = default;
};

/// A single executable line after comment stripping and whitespace folding.
struct SourceLine {
  std::string raw;
  std::string normalized;
  int indent = 0;
  std::vector<Atom> atoms;
  /// Set when a string literal was left open; `normalized` is then the
  /// trimmed raw text.
  bool unterminated_string = false;

  bool operator==(const SourceLine&) const = default;
};

/// The comparison key used everywhere lines are matched: (indent, text).
struct ProgramLine {
  std::string text;
  int indent = 0;

  bool operator==(const ProgramLine&) const = default;
  auto operator<=>(const ProgramLine&) const = default;
};

inline ProgramLine key_of(const SourceLine& line) {
  return {line.normalized, line.indent};
}

enum class TestMode { StdinStdout, FunctionCall };

std::string_view to_string(TestMode mode) noexcept;
std::optional<TestMode> test_mode_from_string(std::string_view name) noexcept;

inline constexpr int kDefaultTestTimeoutMs = 2000;

struct TestCase {
  TestMode mode = TestMode::StdinStdout;
  /// stdin text, or a Python literal list of call arguments.
  std::string input;
  /// expected stdout text, or a Python literal for the return value.
  std::string expected;
  int timeout_ms = kDefaultTestTimeoutMs;
  /// Function to call in function-call mode. Empty means the first
  /// top-level `def` of the submitted code.
  std::string function_name;

  bool operator==(const TestCase&) const = default;
};

struct Problem {
  std::string id;
  std::string statement;
  std::string solution_source;
  std::vector<TestCase> test_suite;
  std::string author;
  std::string title;

  bool operator==(const Problem&) const = default;
};

/// Throws Error(InvalidProblem) when the structural problem invariants fail.
void validate_problem_shape(const Problem& problem);

enum class BlockKind { Fixed, Movable, Distractor };

std::string_view to_string(BlockKind kind) noexcept;
std::optional<BlockKind> block_kind_from_string(std::string_view name) noexcept;

struct Block {
  std::string id;
  std::vector<SourceLine> lines;
  BlockKind kind = BlockKind::Movable;
  /// Index of the first line in the solution; absent for distractors.
  std::optional<int> solution_pos;
  /// For distractors: the movable block this one imitates.
  std::optional<std::string> paired_with;

  int line_count() const noexcept { return static_cast<int>(lines.size()); }
  /// Indent of the first line; other lines are placed relative to it.
  int base_indent() const noexcept { return lines.empty() ? 0 : lines.front().indent; }

  bool operator==(const Block&) const = default;
};

struct ParsonsPuzzle {
  std::string puzzle_id;
  std::string problem_id;
  std::vector<Block> blocks;
  std::vector<std::string> tray_order;
  int solution_line_count = 0;
  std::uint64_t seed = 0;
  int merges_applied = 0;

  const Block* find_block(std::string_view id) const noexcept;
  std::size_t count(BlockKind kind) const noexcept;
  /// Movable blocks ordered by solution position.
  std::vector<const Block*> movable_in_solution_order() const;
  /// Distractors paired with the given block id.
  std::vector<const Block*> distractors_paired_with(std::string_view id) const;

  bool operator==(const ParsonsPuzzle&) const = default;
};

struct Placement {
  std::string block_id;
  int indent = 0;

  bool operator==(const Placement&) const = default;
};

/// Blocks the student placed in the answer area, top to bottom. Fixed
/// blocks are implicit.
struct Arrangement {
  std::vector<Placement> placements;

  bool operator==(const Arrangement&) const = default;
};

/// An expanded program line together with where it came from.
struct ExpandedLine {
  ProgramLine line;
  std::string block_id;
  BlockKind kind = BlockKind::Fixed;
  /// Index into Arrangement::placements, or -1 for fixed blocks.
  int placement = -1;
};

/// Fixed blocks sit at their solution positions; placed blocks fill the
/// remaining slots in order. Throws UnknownBlock / DuplicateBlock.
std::vector<ExpandedLine> expand_arrangement_detailed(const ParsonsPuzzle& puzzle,
                                                      const Arrangement& arr);
std::vector<ProgramLine> expand_arrangement(const ParsonsPuzzle& puzzle, const Arrangement& arr);

/// The reference program encoded by the fixed and movable blocks.
std::vector<ProgramLine> solution_lines(const ParsonsPuzzle& puzzle);

/// Movable blocks in solution order at their solution indents.
Arrangement canonical_arrangement(const ParsonsPuzzle& puzzle);

/// Renders (text, indent) lines with four spaces per level.
std::string render_program(const std::vector<ProgramLine>& lines);

struct Violation {
  std::string invariant;
  std::vector<std::string> ids;
  std::string detail;
};

/// Empty iff every structural puzzle invariant holds.
std::vector<Violation> check_puzzle_invariants(const ParsonsPuzzle& puzzle);

}  // namespace scaffold
