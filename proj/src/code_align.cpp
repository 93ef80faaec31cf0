#include "scaffold/code_align.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>

namespace scaffold {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False",  "None",   "True",    "and",      "as",       "assert", "async",
    "await",  "break",  "class",   "continue", "def",      "del",    "elif",
    "else",   "except", "finally", "for",      "from",     "global", "if",
    "import", "in",     "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",   "raise",  "return",  "try",      "while",    "with",   "yield",
};

constexpr std::array<std::string_view, 4> kOperators3 = {"**=", "//=", ">>=", "<<="};
constexpr std::array<std::string_view, 19> kOperators2 = {
    "**", "//", "==", "!=", "<=", ">=", "->", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", ":=", "<<", ">>",
};
constexpr std::string_view kOperators1 = "+-*/%=<>&|^~@";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\f' || c == '\v' || c == '\r'; }
bool is_quote(char c) { return c == '\'' || c == '"'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

/// Returns one past the closing quote of the literal opening at `start`, or
/// nullopt if it does not close on this line.
std::optional<std::size_t> string_end(std::string_view s, std::size_t start) {
  const char q = s[start];
  const bool triple = s.size() >= start + 3 && s[start + 1] == q && s[start + 2] == q;
  const std::size_t delim = triple ? 3 : 1;
  std::size_t j = start + delim;
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (s[j] == q && (!triple || (j + 2 < s.size() && s[j + 1] == q && s[j + 2] == q))) {
      return j + delim;
    }
    ++j;
  }
  return std::nullopt;
}

bool is_string_prefix(std::string_view word) {
  std::string lower(word);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static constexpr std::array<std::string_view, 8> prefixes = {"r",  "b",  "f",  "u",
                                                               "rb", "br", "fr", "rf"};
  return std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && (is_space(s.back()) || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::vector<std::string_view>& keyword_list() {
  static const std::vector<std::string_view> list(kKeywords.begin(), kKeywords.end());
  return list;
}

bool is_keyword(std::string_view word) noexcept {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::optional<SourceLine> normalize_line(std::string_view raw) {
  if (!raw.empty() && raw.back() == '\n') raw.remove_suffix(1);
  if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

  std::size_t pos = 0;
  int columns = 0;
  while (pos < raw.size() && (raw[pos] == ' ' || raw[pos] == '\t')) {
    columns += raw[pos] == '\t' ? kIndentWidth : 1;
    ++pos;
  }
  const std::string_view body = raw.substr(pos);

  std::string out;
  bool pending_space = false;
  bool unterminated = false;
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '#') break;
    if (is_space(c)) {
      pending_space = true;
      ++i;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    if (is_quote(c)) {
      const auto end = string_end(body, i);
      if (!end) {
        unterminated = true;
        break;
      }
      out.append(body.substr(i, *end - i));
      i = *end;
      continue;
    }
    out += c;
    ++i;
  }

  SourceLine line;
  line.raw = std::string(raw);
  line.indent = columns / kIndentWidth;
  if (unterminated) {
    line.normalized = std::string(trim(body));
    line.unterminated_string = true;
  } else {
    line.normalized = std::move(out);
  }
  if (line.normalized.empty()) return std::nullopt;
  line.atoms = tokenize_atoms(line.normalized);
  return line;
}

std::vector<SourceLine> parse_source(std::string_view source) {
  std::vector<SourceLine> out;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t end = source.find('\n', start);
    if (end == std::string_view::npos) end = source.size();
    if (auto line = normalize_line(source.substr(start, end - start))) {
      out.push_back(std::move(*line));
    }
    if (end == source.size()) break;
    start = end + 1;
  }
  return out;
}

std::vector<Atom> tokenize_atoms(std::string_view s) {
  std::vector<Atom> atoms;
  auto emit = [&](std::size_t begin, std::size_t end, AtomKind kind) {
    atoms.push_back({std::string(s.substr(begin, end - begin)), kind, begin, end});
  };

  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_quote(c)) {
      const std::size_t end = string_end(s, i).value_or(s.size());
      emit(i, end, AtomKind::StringLiteral);
      i = end;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      const std::string_view word = s.substr(i, j - i);
      if (j < s.size() && is_quote(s[j]) && is_string_prefix(word)) {
        const std::size_t end = string_end(s, j).value_or(s.size());
        emit(i, end, AtomKind::StringLiteral);
        i = end;
        continue;
      }
      emit(i, j, is_keyword(word) ? AtomKind::Keyword : AtomKind::Identifier);
      i = j;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::size_t j = i;
      const bool hex_like = c == '0' && i + 1 < s.size() &&
                            std::string_view("xXoObB").find(s[i + 1]) != std::string_view::npos;
      while (j < s.size()) {
        const char d = s[j];
        if (is_ident_char(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && !hex_like && j > i &&
                   (s[j - 1] == 'e' || s[j - 1] == 'E') && j + 1 < s.size() &&
                   is_digit(s[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
      emit(i, j, AtomKind::NumberLiteral);
      i = j;
      continue;
    }
    if (s.substr(i, 3) == "...") {
      emit(i, i + 3, AtomKind::Punctuation);
      i += 3;
      continue;
    }
    auto match_any = [&](const auto& table, std::size_t len) {
      if (i + len > s.size()) return false;
      const auto piece = s.substr(i, len);
      return std::find(table.begin(), table.end(), piece) != table.end();
    };
    if (match_any(kOperators3, 3)) {
      emit(i, i + 3, AtomKind::Operator);
      i += 3;
    } else if (match_any(kOperators2, 2)) {
      emit(i, i + 2, AtomKind::Operator);
      i += 2;
    } else if (kOperators1.find(c) != std::string_view::npos) {
      emit(i, i + 1, AtomKind::Operator);
      i += 1;
    } else {
      emit(i, i + 1, AtomKind::Punctuation);
      i += 1;
    }
  }
  return atoms;
}

Alignment align(std::span<const SourceLine> student, std::span<const SourceLine> solution) {
  const std::size_t n = student.size();
  const std::size_t m = solution.size();
  auto same = [&](std::size_t i, std::size_t j) {
    return student[i].indent == solution[j].indent &&
           student[i].normalized == solution[j].normalized;
  };

  // suffix[i][j] = LCS length of student[i..] and solution[j..]
  std::vector<int> suffix((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> int& { return suffix[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      at(i, j) = same(i, j) ? 1 + at(i + 1, j + 1) : std::max(at(i + 1, j), at(i, j + 1));
    }
  }

  Alignment out;
  std::size_t i = 0;
  std::size_t j = 0;
  int remaining = at(0, 0);
  while (remaining > 0) {
    bool found = false;
    for (std::size_t ii = i; ii < n && !found; ++ii) {
      for (std::size_t jj = j; jj < m; ++jj) {
        if (same(ii, jj) && 1 + at(ii + 1, jj + 1) == remaining) {
          out.matched.emplace_back(static_cast<int>(ii), static_cast<int>(jj));
          i = ii + 1;
          j = jj + 1;
          --remaining;
          found = true;
          break;
        }
      }
    }
  }

  std::vector<bool> student_hit(n, false);
  std::vector<bool> solution_hit(m, false);
  for (const auto& [s, t] : out.matched) {
    student_hit[static_cast<std::size_t>(s)] = true;
    solution_hit[static_cast<std::size_t>(t)] = true;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!student_hit[k]) out.incorrect_student.push_back(static_cast<int>(k));
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!solution_hit[k]) out.unmatched_solution.push_back(static_cast<int>(k));
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i + 1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t above = row[j + 1];
      const std::size_t substitute = diagonal + (a[i] == b[j] ? 0 : 1);
      row[j + 1] = std::min({above + 1, row[j] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double similarity(const SourceLine& a, const SourceLine& b) {
  const std::size_t longest = std::max(a.normalized.size(), b.normalized.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a.normalized, b.normalized)) /
                   static_cast<double>(longest);
}

}  // namespace scaffold
