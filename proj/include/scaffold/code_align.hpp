#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scaffold/core_model.hpp"

namespace scaffold {

/// Normalizes one physical line. Returns nullopt for blank and comment-only
/// lines. Leading tabs count as four spaces; indent is floor(spaces / 4).
/// A `#` outside a string literal starts a comment. Whitespace outside
/// string literals collapses to a single space. The returned line carries
/// its atoms.
std::optional<SourceLine> normalize_line(std::string_view raw);

/// Splits source text on newlines and keeps the executable lines.
std::vector<SourceLine> parse_source(std::string_view source);

bool is_keyword(std::string_view word) noexcept;
const std::vector<std::string_view>& keyword_list();

/// Lexes normalized text into atoms. Unrecognized characters become
/// punctuation atoms.
std::vector<Atom> tokenize_atoms(std::string_view normalized);
inline std::vector<Atom> tokenize_atoms(const SourceLine& line) {
  return tokenize_atoms(line.normalized);
}

struct Alignment {
  /// (student index, solution index), strictly increasing in both.
  std::vector<std::pair<int, int>> matched;
  std::vector<int> incorrect_student;
  std::vector<int> unmatched_solution;

  bool operator==(const Alignment&) const = default;
};

/// Longest common subsequence under the (indent, normalized) key. Among
/// maximum-length matchings, picks the lexicographically smallest student
/// index sequence, then the smallest solution indices.
Alignment align(std::span<const SourceLine> student, std::span<const SourceLine> solution);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein / max length over normalized text; 1 when both empty.
double similarity(const SourceLine& a, const SourceLine& b);

}  // namespace scaffold
