#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scaffold/code_align.hpp"
#include "scaffold/core_model.hpp"

namespace scaffold {

struct GenConfig {
  int max_distractors = 3;
  double pair_threshold = 0.3;
  std::uint64_t seed = 0;
};

/// xorshift64* (Vigna). A zero seed is replaced by kZeroSeedSubstitute
/// because the all-zero state is a fixed point.
class Xorshift64Star {
 public:
  static constexpr std::uint64_t kZeroSeedSubstitute = 0x9E3779B97F4A7C15ULL;

  explicit Xorshift64Star(std::uint64_t seed) noexcept
      : state_(seed == 0 ? kZeroSeedSubstitute : seed) {}

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform-ish draw in [0, bound) by modulo; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates over `ids` driven by `rng`, from the last index down.
void seeded_shuffle(std::vector<std::string>& ids, Xorshift64Star& rng);

/// Opaque block ids ("b" + 8 hex digits) drawn from a seeded stream.
/// Ids carry no positional information.
class BlockIdSource {
 public:
  BlockIdSource(std::uint64_t seed, std::set<std::string> taken = {});
  std::string next();

 private:
  Xorshift64Star rng_;
  std::set<std::string> taken_;
};

/// Tray permutation of the non-fixed blocks. Input order is the order of
/// `non_fixed`. If the movable blocks come out in solution order and there
/// are at least two of them, the first two movable entries are swapped.
std::vector<std::string> shuffle_tray(std::span<const Block> non_fixed, std::uint64_t seed);

/// Mines paired distractors from the student's incorrect lines. Candidates
/// are processed by descending best similarity (ties: lower student index)
/// and greedily take the most similar still-unpaired movable block.
std::vector<Block> select_distractors(const Alignment& alignment,
                                      std::span<const SourceLine> student,
                                      std::span<const Block> movable, const GenConfig& cfg,
                                      BlockIdSource& ids);

/// Throws Error(AlreadyCorrect) when nothing in the solution is unmatched.
ParsonsPuzzle generate_puzzle(const Alignment& alignment, std::span<const SourceLine> solution,
                              std::span<const SourceLine> student, const GenConfig& cfg,
                              const std::string& problem_id = {});

/// Combines two solution-adjacent movable blocks (either argument order).
/// Throws UnknownBlock, NotMovable, NotAdjacent, TooFewBlocks.
ParsonsPuzzle merge_blocks(const ParsonsPuzzle& puzzle, const std::string& a,
                           const std::string& b);

/// Earliest pair of solution-adjacent movable blocks, if any.
std::optional<std::pair<std::string, std::string>> auto_merge_pair(const ParsonsPuzzle& puzzle);

}  // namespace scaffold
