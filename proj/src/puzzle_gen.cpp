#include "scaffold/puzzle_gen.hpp"

#include <algorithm>
#include <cstdio>

#include "scaffold/error.hpp"

namespace scaffold {

namespace {

constexpr std::uint64_t kIdStream = 0xA0761D6478BD642FULL;

double best_line_similarity(const SourceLine& candidate, const Block& block) {
  double best = 0.0;
  for (const auto& line : block.lines) best = std::max(best, similarity(candidate, line));
  return best;
}

bool same_key(const SourceLine& line, const Block& block) {
  return block.lines.size() == 1 && key_of(block.lines.front()) == key_of(line);
}

std::string hex8(std::uint64_t value) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(value >> 32));
  return buf;
}

std::vector<Block> non_fixed_blocks(const std::vector<Block>& blocks) {
  std::vector<Block> out;
  for (const auto& block : blocks) {
    if (block.kind == BlockKind::Movable) out.push_back(block);
  }
  std::stable_sort(out.begin(), out.end(), [](const Block& a, const Block& b) {
    return a.solution_pos.value_or(0) < b.solution_pos.value_or(0);
  });
  for (const auto& block : blocks) {
    if (block.kind == BlockKind::Distractor) out.push_back(block);
  }
  return out;
}

}  // namespace

void seeded_shuffle(std::vector<std::string>& ids, Xorshift64Star& rng) {
  for (std::size_t i = ids.size(); i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(ids[i], ids[j]);
  }
}

BlockIdSource::BlockIdSource(std::uint64_t seed, std::set<std::string> taken)
    : rng_(seed ^ kIdStream), taken_(std::move(taken)) {}

std::string BlockIdSource::next() {
  while (true) {
    std::string id = "b" + hex8(rng_.next());
    if (taken_.insert(id).second) return id;
  }
}

std::vector<std::string> shuffle_tray(std::span<const Block> non_fixed, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(non_fixed.size());
  for (const auto& block : non_fixed) ids.push_back(block.id);
  Xorshift64Star rng(seed);
  seeded_shuffle(ids, rng);

  std::vector<std::size_t> movable_slots;
  std::vector<int> positions;
  for (std::size_t slot = 0; slot < ids.size(); ++slot) {
    for (const auto& block : non_fixed) {
      if (block.id == ids[slot] && block.kind == BlockKind::Movable) {
        movable_slots.push_back(slot);
        positions.push_back(block.solution_pos.value_or(0));
      }
    }
  }
  if (movable_slots.size() >= 2 && std::is_sorted(positions.begin(), positions.end())) {
    std::swap(ids[movable_slots[0]], ids[movable_slots[1]]);
  }
  return ids;
}

std::vector<Block> select_distractors(const Alignment& alignment,
                                      std::span<const SourceLine> student,
                                      std::span<const Block> movable, const GenConfig& cfg,
                                      BlockIdSource& ids) {
  struct Candidate {
    int student_index;
    double best;
  };
  std::vector<Candidate> candidates;
  for (int index : alignment.incorrect_student) {
    const auto& line = student[static_cast<std::size_t>(index)];
    // A student line repeated verbatim would produce indistinguishable blocks.
    const bool repeat = std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) {
      return key_of(student[static_cast<std::size_t>(c.student_index)]) == key_of(line);
    });
    if (repeat) continue;
    double best = 0.0;
    for (const auto& block : movable) best = std::max(best, best_line_similarity(line, block));
    candidates.push_back({index, best});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.best > b.best; });

  struct Pairing {
    int student_index;
    std::size_t block;
    double score;
  };
  std::vector<bool> taken(movable.size(), false);
  std::vector<Pairing> pairings;
  for (const auto& candidate : candidates) {
    const auto& line = student[static_cast<std::size_t>(candidate.student_index)];
    std::optional<std::size_t> choice;
    double choice_score = -1.0;
    for (std::size_t k = 0; k < movable.size(); ++k) {
      if (taken[k]) continue;
      const double score = best_line_similarity(line, movable[k]);
      if (score > choice_score) {
        choice = k;
        choice_score = score;
      }
    }
    if (!choice || choice_score < cfg.pair_threshold) continue;
    if (same_key(line, movable[*choice])) continue;
    taken[*choice] = true;
    pairings.push_back({candidate.student_index, *choice, choice_score});
  }

  std::stable_sort(pairings.begin(), pairings.end(),
                   [](const Pairing& a, const Pairing& b) { return a.score > b.score; });
  if (static_cast<int>(pairings.size()) > std::max(cfg.max_distractors, 0)) {
    pairings.resize(static_cast<std::size_t>(std::max(cfg.max_distractors, 0)));
  }
  std::stable_sort(pairings.begin(), pairings.end(), [](const Pairing& a, const Pairing& b) {
    return a.student_index < b.student_index;
  });

  std::vector<Block> out;
  for (const auto& p : pairings) {
    Block block;
    block.id = ids.next();
    block.kind = BlockKind::Distractor;
    block.lines = {student[static_cast<std::size_t>(p.student_index)]};
    block.paired_with = movable[p.block].id;
    out.push_back(std::move(block));
  }
  return out;
}

ParsonsPuzzle generate_puzzle(const Alignment& alignment, std::span<const SourceLine> solution,
                              std::span<const SourceLine> student, const GenConfig& cfg,
                              const std::string& problem_id) {
  if (alignment.unmatched_solution.empty()) {
    throw Error(ErrorCode::AlreadyCorrect, "student code already matches the solution");
  }
  BlockIdSource ids(cfg.seed);

  ParsonsPuzzle puzzle;
  puzzle.problem_id = problem_id;
  puzzle.seed = cfg.seed;
  puzzle.solution_line_count = static_cast<int>(solution.size());
  puzzle.puzzle_id = "p" + ids.next().substr(1);

  std::vector<std::optional<int>> student_for(solution.size());
  for (const auto& [s, t] : alignment.matched) student_for[static_cast<std::size_t>(t)] = s;

  std::vector<Block> movable;
  for (std::size_t pos = 0; pos < solution.size(); ++pos) {
    Block block;
    block.id = ids.next();
    block.solution_pos = static_cast<int>(pos);
    if (student_for[pos]) {
      block.kind = BlockKind::Fixed;
      block.lines = {student[static_cast<std::size_t>(*student_for[pos])]};
    } else {
      block.kind = BlockKind::Movable;
      block.lines = {solution[pos]};
      movable.push_back(block);
    }
    puzzle.blocks.push_back(std::move(block));
  }

  for (auto& distractor : select_distractors(alignment, student, movable, cfg, ids)) {
    puzzle.blocks.push_back(std::move(distractor));
  }
  const auto tray_input = non_fixed_blocks(puzzle.blocks);
  puzzle.tray_order = shuffle_tray(tray_input, cfg.seed);
  return puzzle;
}

ParsonsPuzzle merge_blocks(const ParsonsPuzzle& puzzle, const std::string& a,
                           const std::string& b) {
  const Block* first = puzzle.find_block(a);
  const Block* second = puzzle.find_block(b);
  if (first == nullptr) throw Error(ErrorCode::UnknownBlock, "unknown block id '" + a + "'");
  if (second == nullptr) throw Error(ErrorCode::UnknownBlock, "unknown block id '" + b + "'");
  if (first->kind != BlockKind::Movable || second->kind != BlockKind::Movable) {
    throw Error(ErrorCode::NotMovable, "only movable blocks can be combined");
  }
  if (*second->solution_pos < *first->solution_pos) std::swap(first, second);
  if (first == second || *first->solution_pos + first->line_count() != *second->solution_pos) {
    throw Error(ErrorCode::NotAdjacent, "blocks are not adjacent in the solution");
  }
  if (puzzle.count(BlockKind::Movable) < 3) {
    throw Error(ErrorCode::TooFewBlocks, "combining would leave fewer than two movable blocks");
  }

  ParsonsPuzzle out = puzzle;
  out.merges_applied = puzzle.merges_applied + 1;
  std::set<std::string> existing;
  for (const auto& block : puzzle.blocks) existing.insert(block.id);
  BlockIdSource ids(puzzle.seed + static_cast<std::uint64_t>(out.merges_applied),
                    std::move(existing));

  Block merged;
  merged.id = ids.next();
  merged.kind = BlockKind::Movable;
  merged.solution_pos = first->solution_pos;
  merged.lines = first->lines;
  merged.lines.insert(merged.lines.end(), second->lines.begin(), second->lines.end());

  const std::string first_id = first->id;
  const std::string second_id = second->id;
  std::vector<Block> blocks;
  for (const auto& block : puzzle.blocks) {
    if (block.id == first_id) {
      blocks.push_back(merged);
    } else if (block.id != second_id) {
      blocks.push_back(block);
      if (block.paired_with && (*block.paired_with == first_id || *block.paired_with == second_id)) {
        blocks.back().paired_with = merged.id;
      }
    }
  }
  out.blocks = std::move(blocks);
  out.tray_order = shuffle_tray(non_fixed_blocks(out.blocks),
                                puzzle.seed + static_cast<std::uint64_t>(out.merges_applied));
  return out;
}

std::optional<std::pair<std::string, std::string>> auto_merge_pair(const ParsonsPuzzle& puzzle) {
  const auto movable = puzzle.movable_in_solution_order();
  for (std::size_t i = 0; i + 1 < movable.size(); ++i) {
    if (*movable[i]->solution_pos + movable[i]->line_count() == *movable[i + 1]->solution_pos) {
      return std::make_pair(movable[i]->id, movable[i + 1]->id);
    }
  }
  return std::nullopt;
}

}  // namespace scaffold
