#include "scaffold/core_model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "scaffold/code_align.hpp"
#include "scaffold/error.hpp"

namespace scaffold {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::pair<Enum, std::string_view> (&table)[N],
                           std::string_view name) noexcept {
  for (const auto& [value, text] : table) {
    if (text == name) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::pair<Enum, std::string_view> (&table)[N], Enum value) noexcept {
  for (const auto& [v, text] : table) {
    if (v == value) return text;
  }
  return "?";
}

constexpr std::pair<AtomKind, std::string_view> kAtomKinds[] = {
    {AtomKind::Keyword, "keyword"},
    {AtomKind::Identifier, "identifier"},
    {AtomKind::NumberLiteral, "number-literal"},
    {AtomKind::StringLiteral, "string-literal"},
    {AtomKind::Operator, "operator"},
    {AtomKind::Punctuation, "punctuation"},
};

constexpr std::pair<TestMode, std::string_view> kTestModes[] = {
    {TestMode::StdinStdout, "stdin-stdout"},
    {TestMode::FunctionCall, "function-call"},
};

constexpr std::pair<BlockKind, std::string_view> kBlockKinds[] = {
    {BlockKind::Fixed, "fixed"},
    {BlockKind::Movable, "movable"},
    {BlockKind::Distractor, "distractor"},
};

void append_block_lines(std::vector<ExpandedLine>& out, const Block& block, int base_indent,
                        int placement) {
  const int first = block.base_indent();
  for (const auto& line : block.lines) {
    out.push_back({{line.normalized, base_indent + (line.indent - first)}, block.id, block.kind,
                   placement});
  }
}

}  // namespace

std::string_view to_string(AtomKind kind) noexcept { return name_of(kAtomKinds, kind); }
std::optional<AtomKind> atom_kind_from_string(std::string_view name) noexcept {
  return lookup(kAtomKinds, name);
}
std::string_view to_string(TestMode mode) noexcept { return name_of(kTestModes, mode); }
std::optional<TestMode> test_mode_from_string(std::string_view name) noexcept {
  return lookup(kTestModes, name);
}
std::string_view to_string(BlockKind kind) noexcept { return name_of(kBlockKinds, kind); }
std::optional<BlockKind> block_kind_from_string(std::string_view name) noexcept {
  return lookup(kBlockKinds, name);
}

void validate_problem_shape(const Problem& problem) {
  if (problem.id.empty()) throw Error(ErrorCode::InvalidProblem, "problem id is empty");
  if (parse_source(problem.solution_source).empty()) {
    throw Error(ErrorCode::InvalidProblem, "reference solution has no executable lines");
  }
  if (problem.test_suite.empty()) {
    throw Error(ErrorCode::InvalidProblem, "test suite is empty");
  }
  for (std::size_t i = 0; i < problem.test_suite.size(); ++i) {
    if (problem.test_suite[i].timeout_ms <= 0) {
      throw Error(ErrorCode::InvalidProblem,
                  "test " + std::to_string(i) + " has a non-positive timeout");
    }
  }
}

const Block* ParsonsPuzzle::find_block(std::string_view id) const noexcept {
  for (const auto& block : blocks) {
    if (block.id == id) return &block;
  }
  return nullptr;
}

std::size_t ParsonsPuzzle::count(BlockKind kind) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.kind == kind; }));
}

std::vector<const Block*> ParsonsPuzzle::movable_in_solution_order() const {
  std::vector<const Block*> out;
  for (const auto& block : blocks) {
    if (block.kind == BlockKind::Movable) out.push_back(&block);
  }
  std::stable_sort(out.begin(), out.end(), [](const Block* a, const Block* b) {
    return a->solution_pos.value_or(0) < b->solution_pos.value_or(0);
  });
  return out;
}

std::vector<const Block*> ParsonsPuzzle::distractors_paired_with(std::string_view id) const {
  std::vector<const Block*> out;
  for (const auto& block : blocks) {
    if (block.kind == BlockKind::Distractor && block.paired_with && *block.paired_with == id) {
      out.push_back(&block);
    }
  }
  return out;
}

std::vector<ExpandedLine> expand_arrangement_detailed(const ParsonsPuzzle& puzzle,
                                                      const Arrangement& arr) {
  std::vector<const Block*> placed;
  std::set<std::string_view> seen;
  for (const auto& p : arr.placements) {
    const Block* block = puzzle.find_block(p.block_id);
    if (block == nullptr || block->kind == BlockKind::Fixed) {
      throw Error(ErrorCode::UnknownBlock, "unknown block id '" + p.block_id + "'");
    }
    if (!seen.insert(block->id).second) {
      throw Error(ErrorCode::DuplicateBlock, "block '" + p.block_id + "' placed twice");
    }
    placed.push_back(block);
  }

  std::vector<const Block*> fixed;
  for (const auto& block : puzzle.blocks) {
    if (block.kind == BlockKind::Fixed) fixed.push_back(&block);
  }
  std::stable_sort(fixed.begin(), fixed.end(), [](const Block* a, const Block* b) {
    return a->solution_pos.value_or(0) < b->solution_pos.value_or(0);
  });

  std::vector<ExpandedLine> out;
  std::size_t next_fixed = 0;
  auto flush_fixed = [&](bool all) {
    while (next_fixed < fixed.size() &&
           (all || fixed[next_fixed]->solution_pos.value_or(0) <= static_cast<int>(out.size()))) {
      append_block_lines(out, *fixed[next_fixed], fixed[next_fixed]->base_indent(), -1);
      ++next_fixed;
    }
  };
  for (std::size_t i = 0; i < placed.size(); ++i) {
    flush_fixed(false);
    append_block_lines(out, *placed[i], arr.placements[i].indent, static_cast<int>(i));
  }
  flush_fixed(true);
  return out;
}

std::vector<ProgramLine> expand_arrangement(const ParsonsPuzzle& puzzle, const Arrangement& arr) {
  std::vector<ProgramLine> out;
  for (auto& line : expand_arrangement_detailed(puzzle, arr)) out.push_back(std::move(line.line));
  return out;
}

std::vector<ProgramLine> solution_lines(const ParsonsPuzzle& puzzle) {
  std::vector<const Block*> ordered;
  for (const auto& block : puzzle.blocks) {
    if (block.kind != BlockKind::Distractor) ordered.push_back(&block);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const Block* a, const Block* b) {
    return a->solution_pos.value_or(0) < b->solution_pos.value_or(0);
  });
  std::vector<ProgramLine> out;
  for (const Block* block : ordered) {
    for (const auto& line : block->lines) out.push_back(key_of(line));
  }
  return out;
}

Arrangement canonical_arrangement(const ParsonsPuzzle& puzzle) {
  Arrangement arr;
  for (const Block* block : puzzle.movable_in_solution_order()) {
    arr.placements.push_back({block->id, block->base_indent()});
  }
  return arr;
}

std::string render_program(const std::vector<ProgramLine>& lines) {
  std::string out;
  for (const auto& line : lines) {
    out.append(static_cast<std::size_t>(std::max(0, line.indent) * kIndentWidth), ' ');
    out += line.text;
    out += '\n';
  }
  return out;
}

std::vector<Violation> check_puzzle_invariants(const ParsonsPuzzle& puzzle) {
  std::vector<Violation> out;
  const int n = puzzle.solution_line_count;
  if (n < 0) out.push_back({"negative line count", {}, std::to_string(n)});
  if (puzzle.merges_applied < 0) out.push_back({"negative merge count", {}, ""});

  std::map<std::string, int> id_counts;
  for (const auto& block : puzzle.blocks) ++id_counts[block.id];
  for (const auto& [id, count] : id_counts) {
    if (count > 1) out.push_back({"duplicate block id", {id}, std::to_string(count) + " blocks"});
  }

  std::vector<std::vector<std::string>> coverage(static_cast<std::size_t>(std::max(n, 0)));
  for (const auto& block : puzzle.blocks) {
    if (block.lines.empty()) out.push_back({"empty block", {block.id}, ""});
    if (block.kind == BlockKind::Distractor) {
      if (block.solution_pos) {
        out.push_back({"distractor has solution position", {block.id}, ""});
      }
      if (block.paired_with) {
        const Block* partner = puzzle.find_block(*block.paired_with);
        if (partner == nullptr || partner->kind != BlockKind::Movable) {
          out.push_back({"bad pairing", {block.id, *block.paired_with},
                         "distractor must pair with a movable block"});
        }
      }
      continue;
    }
    if (block.paired_with) {
      out.push_back({"bad pairing", {block.id}, "only distractors carry a pairing"});
    }
    if (!block.solution_pos) {
      out.push_back({"missing solution position", {block.id}, ""});
      continue;
    }
    const int first = *block.solution_pos;
    for (int k = 0; k < block.line_count(); ++k) {
      const int index = first + k;
      if (index < 0 || index >= n) {
        out.push_back({"coverage out of range", {block.id}, "line " + std::to_string(index)});
        continue;
      }
      coverage[static_cast<std::size_t>(index)].push_back(block.id);
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto& owners = coverage[static_cast<std::size_t>(i)];
    if (owners.empty()) {
      out.push_back({"uncovered line", {}, "line " + std::to_string(i)});
    } else if (owners.size() > 1) {
      out.push_back({"double coverage", owners, "line " + std::to_string(i)});
    }
  }

  std::map<std::string, int> tray_counts;
  for (const auto& id : puzzle.tray_order) ++tray_counts[id];
  for (const auto& [id, count] : tray_counts) {
    const Block* block = puzzle.find_block(id);
    if (block == nullptr) {
      out.push_back({"tray unknown block", {id}, ""});
    } else if (block->kind == BlockKind::Fixed) {
      out.push_back({"tray contains fixed block", {id}, ""});
    }
    if (count > 1) out.push_back({"tray duplicate", {id}, std::to_string(count) + " entries"});
  }
  for (const auto& block : puzzle.blocks) {
    if (block.kind != BlockKind::Fixed && tray_counts.count(block.id) == 0) {
      out.push_back({"tray incomplete", {block.id}, "block missing from tray"});
    }
  }

  // Movable blocks must not already appear in solution order.
  std::vector<int> movable_positions;
  std::vector<std::string> movable_ids;
  for (const auto& id : puzzle.tray_order) {
    const Block* block = puzzle.find_block(id);
    if (block != nullptr && block->kind == BlockKind::Movable && block->solution_pos) {
      movable_positions.push_back(*block->solution_pos);
      movable_ids.push_back(id);
    }
  }
  if (movable_positions.size() >= 2 &&
      std::adjacent_find(movable_positions.begin(), movable_positions.end(),
                         std::greater_equal<>()) == movable_positions.end()) {
    out.push_back({"tray in solution order", movable_ids, ""});
  }
  return out;
}

}  // namespace scaffold
