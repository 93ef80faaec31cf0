#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scaffold/core_model.hpp"
#include "scaffold/provider.hpp"

namespace scaffold {

inline constexpr std::size_t kMinSubgoals = 4;
inline constexpr std::size_t kMaxSubgoals = 6;
inline constexpr std::size_t kMaxSubgoalLength = 160;
inline constexpr std::size_t kMinClozeBlanks = 3;
inline constexpr std::size_t kMaxClozeBlanks = 6;
inline constexpr std::size_t kMinClozeOptions = 3;

struct SubgoalList {
  std::vector<std::string> items;

  bool operator==(const SubgoalList&) const = default;
};

struct DistractorContrast {
  std::string why_correct;
  std::string why_distractor_wrong;

  bool operator==(const DistractorContrast&) const = default;
};

struct BlockExplanation {
  std::string block_id;
  std::string behavior;
  std::string purpose;
  std::optional<DistractorContrast> distractor_contrast;

  bool operator==(const BlockExplanation&) const = default;
};

struct AtomExplanation {
  std::string block_id;
  /// Index into the block's atoms, counted across all of its lines.
  int atom_index = 0;
  std::string surface;
  std::optional<std::string> execution;
  std::string purpose;

  bool operator==(const AtomExplanation&) const = default;
};

struct ClozeBlank {
  std::vector<std::string> options;
  int correct_index = 0;

  bool operator==(const ClozeBlank&) const = default;
};

/// `template_text` holds the markers [[1]] .. [[k]], one per blank.
struct ClozeQuestion {
  std::string template_text;
  std::vector<ClozeBlank> blanks;

  bool operator==(const ClozeQuestion&) const = default;
};

struct ClozeGrade {
  bool correct = false;
  std::vector<bool> per_blank;

  bool operator==(const ClozeGrade&) const = default;
};

struct ExplanationBundle {
  SubgoalList subgoals;
  std::vector<BlockExplanation> blocks;
  std::vector<AtomExplanation> atoms;
};

// Validators. Each returns an empty string when the value is acceptable,
// otherwise a short reason.
std::string check_subgoals(const SubgoalList& list);
std::string check_block_explanation(const BlockExplanation& e, bool expect_contrast);
std::string check_atom_explanation(const AtomExplanation& e, const Atom& atom);
std::string check_cloze(const ClozeQuestion& q);

/// The block's atoms in line order.
std::vector<Atom> block_atoms(const Block& block);

// Deterministic fallbacks. Pure functions of their inputs.
SubgoalList fallback_subgoals(std::span<const SourceLine> solution);
BlockExplanation fallback_block_explanation(const Block& block, const Block* paired_distractor);
AtomExplanation fallback_atom_explanation(const Block& block, int atom_index);
ClozeQuestion fallback_cloze(std::span<const Block> solution_blocks,
                             std::span<const BlockExplanation> explanations, std::uint64_t seed);

/// Throws AnswerCountMismatch when the answer count differs from the blank count.
ClozeGrade grade_cloze(const ClozeQuestion& q, std::span<const int> answers);

/// Orchestrates provider calls: cache first, then up to two provider
/// attempts whose output must parse and validate, then the fallback.
/// Only validated provider text is cached.
class Explainer {
 public:
  Explainer(TextProvider& provider, ExplanationCache& cache) : provider_(provider), cache_(cache) {}

  /// `solution_blocks` are the fixed and movable blocks of a puzzle.
  SubgoalList generate_subgoals(const Problem& problem, std::span<const Block> solution_blocks);
  /// Throws DistractorNotExplainable for distractor blocks.
  BlockExplanation generate_block_explanation(const Block& block, const Block* paired_distractor,
                                              std::string_view solution_text);
  /// Throws AtomOutOfRange.
  AtomExplanation generate_atom_explanation(const Block& block, int atom_index);
  ClozeQuestion generate_cloze(std::span<const Block> solution_blocks,
                               std::span<const BlockExplanation> explanations, std::uint64_t seed);

  /// The validated-completion primitive the generators share. `accept`
  /// returns true when the text is usable.
  std::optional<ProviderResponse> complete_validated(
      const ProviderRequest& request, const std::function<bool(const std::string&)>& accept);

 private:
  TextProvider& provider_;
  ExplanationCache& cache_;
};

/// Pulls the first JSON value out of provider text, tolerating code fences
/// and surrounding prose.
std::optional<nlohmann::json> extract_json(std::string_view text);

void to_json(nlohmann::json& j, const SubgoalList& list);
void from_json(const nlohmann::json& j, SubgoalList& list);
void to_json(nlohmann::json& j, const BlockExplanation& e);
void from_json(const nlohmann::json& j, BlockExplanation& e);
void to_json(nlohmann::json& j, const AtomExplanation& e);
void from_json(const nlohmann::json& j, AtomExplanation& e);
void to_json(nlohmann::json& j, const ClozeQuestion& q);
void from_json(const nlohmann::json& j, ClozeQuestion& q);
void to_json(nlohmann::json& j, const ClozeGrade& g);
void to_json(nlohmann::json& j, const ExplanationBundle& b);

}  // namespace scaffold
