#include "scaffold/explain.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "scaffold/code_align.hpp"
#include "scaffold/error.hpp"
#include "scaffold/puzzle_gen.hpp"

namespace scaffold {

using nlohmann::json;

namespace {

std::string tick(std::string_view s) { return "`" + std::string(s) + "`"; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower_first(std::string s) {
  if (!s.empty() && s[0] != '`') s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string truncate(std::string s, std::size_t limit) {
  if (s.size() <= limit) return s;
  s.resize(limit - 3);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s + "...";
}

// Text of atoms [first, last] of a line, taken from the normalized text.
std::string span_text(const SourceLine& line, std::size_t first, std::size_t last) {
  if (first > last || last >= line.atoms.size()) return {};
  const auto b = line.atoms[first].begin;
  const auto e = line.atoms[last].end;
  return line.normalized.substr(b, e - b);
}

std::string first_word(const SourceLine& line) {
  return line.atoms.empty() ? std::string() : line.atoms.front().text;
}

bool ends_with_colon(const SourceLine& line) {
  return !line.atoms.empty() && line.atoms.back().text == ":";
}

// Position of the first atom with the given text outside brackets.
std::optional<std::size_t> find_top_level(const SourceLine& line,
                                          const std::function<bool(const Atom&)>& pred) {
  int depth = 0;
  for (std::size_t i = 0; i < line.atoms.size(); ++i) {
    const auto& a = line.atoms[i];
    if (a.kind == AtomKind::Punctuation || a.kind == AtomKind::Operator) {
      if (a.text == "(" || a.text == "[" || a.text == "{") ++depth;
      if (a.text == ")" || a.text == "]" || a.text == "}") --depth;
    }
    if (depth == 0 && pred(a)) return i;
  }
  return std::nullopt;
}

bool is_augmented(std::string_view op) {
  static const std::set<std::string_view> ops = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                 "&=", "|=", "^=", ">>=", "<<=", "@="};
  return ops.count(op) > 0;
}

std::optional<std::size_t> assignment_op(const SourceLine& line) {
  return find_top_level(line, [](const Atom& a) {
    return a.kind == AtomKind::Operator && (a.text == "=" || is_augmented(a.text));
  });
}

std::vector<std::string> identifiers_in(const SourceLine& line, std::size_t from, std::size_t to) {
  std::vector<std::string> out;
  for (std::size_t i = from; i < to && i < line.atoms.size(); ++i) {
    const auto& a = line.atoms[i];
    if (a.kind == AtomKind::Identifier && std::find(out.begin(), out.end(), a.text) == out.end()) {
      out.push_back(a.text);
    }
  }
  return out;
}

std::string join_ticked(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += tick(names[i]);
  }
  return out;
}

// Condition or iterable text: atoms after the keyword up to a trailing colon.
std::string header_tail(const SourceLine& line, std::size_t from) {
  const std::size_t last = ends_with_colon(line) ? line.atoms.size() - 2 : line.atoms.size() - 1;
  return span_text(line, from, last);
}

std::vector<std::string> def_params(const SourceLine& line) {
  const auto open = std::find_if(line.atoms.begin(), line.atoms.end(),
                                 [](const Atom& a) { return a.text == "("; });
  if (open == line.atoms.end()) return {};
  std::vector<std::string> params;
  int depth = 0;
  bool expect_name = true;
  for (auto it = open; it != line.atoms.end(); ++it) {
    if (it->text == "(" || it->text == "[" || it->text == "{") {
      ++depth;
      continue;
    }
    if (it->text == ")" || it->text == "]" || it->text == "}") {
      if (--depth == 0) break;
      continue;
    }
    if (depth == 1 && it->text == ",") expect_name = true;
    else if (depth == 1 && expect_name && it->kind == AtomKind::Identifier) {
      params.push_back(it->text);
      expect_name = false;
    }
  }
  return params;
}

struct LineText {
  std::string behavior;
  std::string purpose;
};

LineText describe_line(const SourceLine& line) {
  const auto& a = line.atoms;
  const auto word = first_word(line);
  if (a.empty()) return {"Does nothing.", "Keeps the program's structure."};

  if (word == "def" && a.size() > 1) {
    const auto params = def_params(line);
    return {tick("def") + " introduces the function " + tick(a[1].text) +
                (params.empty() ? ", which takes no arguments."
                                : ", which takes " + join_ticked(params) + "."),
            "Gives the solution a named entry point that receives its input."};
  }
  if (word == "for") {
    const auto in = std::find_if(a.begin() + 1, a.end(), [](const Atom& x) { return x.text == "in"; });
    if (in != a.end() && in != a.begin() + 1) {
      const auto in_idx = static_cast<std::size_t>(in - a.begin());
      return {tick("for") + " repeats the indented lines once per item of " +
                  tick(header_tail(line, in_idx + 1)) + ", calling the current item " +
                  tick(span_text(line, 1, in_idx - 1)) + ".",
              "Processes every item so none is skipped."};
    }
  }
  if (word == "while") {
    return {tick("while") + " repeats the indented lines as long as " + tick(header_tail(line, 1)) +
                " holds.",
            "Keeps working until the condition stops holding."};
  }
  if (word == "if") {
    return {tick("if") + " runs the indented lines only when " + tick(header_tail(line, 1)) +
                " is true.",
            "Chooses what to do based on the data."};
  }
  if (word == "elif") {
    return {tick("elif") + " tests " + tick(header_tail(line, 1)) +
                " when the earlier conditions were false.",
            "Handles another case of the decision."};
  }
  if (word == "else") {
    return {tick("else") + " runs the indented lines when no earlier condition held.",
            "Covers every remaining case."};
  }
  if (word == "return") {
    if (a.size() == 1) return {tick("return") + " ends the function without a value.", "Stops the function early."};
    return {tick("return") + " sends the value of " + tick(span_text(line, 1, a.size() - 1)) +
                " back to the caller and ends the function.",
            "Hands the computed result back to whoever called the function."};
  }
  if (word == "break") return {tick("break") + " leaves the innermost loop immediately.", "Stops searching once the answer is known."};
  if (word == "continue") return {tick("continue") + " skips to the next round of the loop.", "Ignores items that need no work."};
  if (word == "pass") return {tick("pass") + " does nothing; it only fills an empty body.", "Keeps the structure valid."};

  if (const auto op = assignment_op(line); op && *op > 0 && *op + 1 < a.size()) {
    const auto target = span_text(line, 0, *op - 1);
    const auto value = span_text(line, *op + 1, a.size() - 1);
    if (a[*op].text != "=") {
      return {"Changes " + tick(target) + " by applying " + tick(a[*op].text) + " with " + tick(value) + ".",
              "Accumulates progress in " + tick(target) + " as the program runs."};
    }
    const auto targets = identifiers_in(line, 0, *op);
    const auto used = identifiers_in(line, *op + 1, a.size());
    const bool update = std::any_of(targets.begin(), targets.end(), [&](const std::string& t) {
      return std::find(used.begin(), used.end(), t) != used.end();
    });
    if (update) {
      return {"Updates " + tick(target) + " to " + tick(value) + ", using its current value.",
              "Accumulates progress in " + tick(target) + " as the program runs."};
    }
    return {"Stores " + tick(value) + " in " + tick(target) + ".",
            "Prepares " + tick(target) + " so later lines can use it."};
  }
  if (word == "print" && a.size() > 2 && a[1].text == "(" && a.back().text == ")") {
    return {"Prints " + tick(span_text(line, 2, a.size() - 2)) + ".", "Shows the result as output."};
  }
  return {"Evaluates " + tick(line.normalized) + ".", "Performs one step of the computation."};
}

std::string block_text(const Block& block) {
  std::vector<ProgramLine> lines;
  for (const auto& l : block.lines) lines.push_back({l.normalized, l.indent - block.base_indent()});
  auto text = render_program(lines);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

// The block line a single-line distractor imitates (merged blocks have several).
const SourceLine& imitated_line(const Block& block, const Block& distractor) {
  const auto& d = distractor.lines.front();
  const SourceLine* best = &block.lines.front();
  for (const auto& l : block.lines) {
    if (similarity(l, d) > similarity(*best, d)) best = &l;
  }
  return *best;
}

std::string contrast_wrong(const Block& block, const Block& distractor) {
  const auto& d = distractor.lines.front();
  const auto& b = imitated_line(block, distractor);
  if (d.normalized == b.normalized) {
    return tick(d.normalized) + " is indented to level " + std::to_string(d.indent) + " instead of " +
           std::to_string(b.indent) + ", which moves it into a different part of the program.";
  }
  const auto& da = d.atoms;
  const auto& ba = b.atoms;
  std::size_t i = 0;
  while (i < da.size() && i < ba.size() && da[i].text == ba[i].text) ++i;
  if (i < da.size() && i < ba.size()) {
    return tick(d.normalized) + " uses " + tick(da[i].text) + " where the solution has " +
           tick(ba[i].text) + ", so it computes something different.";
  }
  if (i < ba.size()) {
    return tick(d.normalized) + " is missing " + tick(ba[i].text) + ", which the solution needs.";
  }
  return tick(d.normalized) + " adds " + tick(da[i].text) + ", which the solution does not have.";
}

const std::map<std::string, std::pair<std::string, std::string>, std::less<>>& keyword_table() {
  static const std::map<std::string, std::pair<std::string, std::string>, std::less<>> table = {
      {"def", {"Creates a function from the indented lines below it.", "Packages steps so they can be reused by name."}},
      {"return", {"Stops the function and hands back the value that follows it.", "Delivers the function's result to the caller."}},
      {"for", {"Takes the next item from a sequence each time around and runs the indented body with it.", "Repeats the same steps for every item."}},
      {"while", {"Checks its condition before each round and runs the indented body while it is true.", "Repeats steps until a condition changes."}},
      {"in", {"Names the collection to take items from, or tests whether a value is inside it.", "Connects a value to a collection."}},
      {"if", {"Evaluates its condition and runs the indented body only when it is true.", "Makes a decision."}},
      {"elif", {"Evaluates another condition when the previous ones were false.", "Adds another case to a decision."}},
      {"else", {"Runs its body when none of the preceding conditions held.", "Handles the remaining case."}},
      {"and", {"Is true only when the conditions on both sides are true.", "Requires two things at once."}},
      {"or", {"Is true when at least one of the conditions on its sides is true.", "Accepts either of two things."}},
      {"not", {"Flips a condition from true to false or back.", "Tests for the opposite case."}},
      {"break", {"Leaves the innermost loop immediately.", "Stops a loop early."}},
      {"continue", {"Jumps to the next round of the innermost loop.", "Skips the rest of this round."}},
      {"pass", {"Does nothing.", "Fills a body that must not be empty."}},
      {"True", {"Produces the boolean value true.", "Represents a condition that holds."}},
      {"False", {"Produces the boolean value false.", "Represents a condition that does not hold."}},
      {"None", {"Produces the special value meaning nothing.", "Marks the absence of a value."}},
      {"is", {"Checks whether two names refer to the very same object.", "Compares identity."}},
      {"import", {"Loads a module so its names can be used.", "Brings in existing code."}},
      {"from", {"Selects the module to import names from.", "Brings in specific names."}},
      {"as", {"Gives the imported or opened thing a local name.", "Provides a convenient name."}},
      {"lambda", {"Creates a small unnamed function.", "Defines a function inline."}},
      {"try", {"Runs its body while watching for errors.", "Prepares to handle failures."}},
      {"except", {"Runs its body when the matching error happened in the try body.", "Handles a failure."}},
      {"finally", {"Runs its body whether or not an error happened.", "Cleans up."}},
      {"raise", {"Signals an error.", "Reports a problem to the caller."}},
      {"with", {"Opens a resource and closes it when the body ends.", "Manages a resource safely."}},
      {"class", {"Creates a new type from the indented definitions.", "Groups data and behavior."}},
      {"global", {"Makes a name refer to the module-level variable.", "Shares a variable across functions."}},
      {"nonlocal", {"Makes a name refer to the enclosing function's variable.", "Shares a variable with an outer function."}},
      {"del", {"Removes a name or an item.", "Discards something no longer needed."}},
      {"assert", {"Stops with an error when its condition is false.", "Checks an assumption."}},
      {"yield", {"Hands out one value and pauses the function.", "Produces values one at a time."}},
      {"async", {"Marks a function or statement as asynchronous.", "Allows waiting without blocking."}},
      {"await", {"Waits for an asynchronous result.", "Pauses until a value is ready."}},
  };
  return table;
}

const std::map<std::string, std::string, std::less<>>& operator_table() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"=", "Stores the value on its right in the name on its left."},
      {"+", "Adds the values on both sides, or joins two strings or lists."},
      {"-", "Subtracts the right value from the left one."},
      {"*", "Multiplies the values on both sides."},
      {"/", "Divides the left value by the right one."},
      {"//", "Divides and rounds down to a whole number."},
      {"%", "Gives the remainder of dividing the left value by the right one."},
      {"**", "Raises the left value to the power of the right one."},
      {"==", "Checks whether both sides are equal."},
      {"!=", "Checks whether the two sides differ."},
      {"<", "Checks whether the left value is smaller."},
      {">", "Checks whether the left value is larger."},
      {"<=", "Checks whether the left value is smaller or equal."},
      {">=", "Checks whether the left value is larger or equal."},
      {"+=", "Adds the right value to the variable on the left."},
      {"-=", "Subtracts the right value from the variable on the left."},
      {"*=", "Multiplies the variable on the left by the right value."},
  };
  return table;
}

std::string punctuation_purpose(std::string_view p) {
  if (p == ":") return "Ends a header; the indented lines below form its body.";
  if (p == "(" || p == ")") return "Groups an expression or holds a call's arguments.";
  if (p == "[" || p == "]") return "Builds a list or selects an item by position.";
  if (p == "{" || p == "}") return "Builds a dictionary or set.";
  if (p == ",") return "Separates items in a list of values.";
  if (p == ".") return "Reaches an attribute or method of a value.";
  return "Structures the line.";
}

AtomExplanation describe_atom(const Block& block, const std::vector<Atom>& atoms, int index) {
  const auto& atom = atoms[static_cast<std::size_t>(index)];
  AtomExplanation e{block.id, index, atom.text, std::nullopt, {}};
  const Atom* prev = index > 0 ? &atoms[static_cast<std::size_t>(index - 1)] : nullptr;
  const Atom* next = static_cast<std::size_t>(index + 1) < atoms.size()
                         ? &atoms[static_cast<std::size_t>(index + 1)] : nullptr;
  switch (atom.kind) {
    case AtomKind::Keyword: {
      const auto& table = keyword_table();
      if (auto it = table.find(atom.text); it != table.end()) {
        e.execution = it->second.first;
        e.purpose = it->second.second;
      } else {
        e.execution = "Applies the " + tick(atom.text) + " rule of the language.";
        e.purpose = "Part of the statement's structure.";
      }
      break;
    }
    case AtomKind::Identifier:
      if (prev && prev->text == "def") {
        e.execution = "Binds the new function to the name " + tick(atom.text) + ".";
        e.purpose = "Names the function so it can be called.";
      } else if (next && next->text == "(") {
        e.execution = "Calls " + tick(atom.text) + " with the values in the parentheses.";
        e.purpose = "Reuses existing behavior instead of writing it again.";
      } else if (prev && prev->text == "for") {
        e.execution = "Receives the next item on each round of the loop.";
        e.purpose = "Names the item currently being processed.";
      } else if (next && next->kind == AtomKind::Operator && (next->text == "=" || is_augmented(next->text))) {
        e.execution = "Receives the value computed on the right.";
        e.purpose = "Remembers that value for later lines.";
      } else {
        e.execution = "Looks up the current value of " + tick(atom.text) + ".";
        e.purpose = "Supplies that value to this line.";
      }
      break;
    case AtomKind::NumberLiteral:
      e.execution = "Produces the number " + atom.text + ".";
      e.purpose = "Provides a fixed value the code needs.";
      break;
    case AtomKind::StringLiteral:
      e.execution = "Produces the text " + atom.text + ".";
      e.purpose = "Provides fixed text the code needs.";
      break;
    case AtomKind::Operator: {
      const auto& table = operator_table();
      auto it = table.find(atom.text);
      e.execution = it != table.end() ? it->second
                                      : "Applies " + tick(atom.text) + " to the values around it.";
      e.purpose = "Combines values to compute a new one.";
      break;
    }
    case AtomKind::Punctuation:
      e.purpose = punctuation_purpose(atom.text);
      break;
  }
  return e;
}

// ----- subgoal fallback -----

struct Group {
  std::string text;
  int lines = 1;
};

std::vector<std::string> assigned_names(std::span<const SourceLine> lines) {
  std::vector<std::string> out;
  for (const auto& l : lines) {
    const auto op = assignment_op(l);
    if (!op) continue;
    for (const auto& n : identifiers_in(l, 0, *op)) {
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
  }
  return out;
}

std::vector<Group> structural_groups(std::span<const SourceLine> sol) {
  std::vector<Group> groups;
  bool in_init = false;
  for (std::size_t i = 0; i < sol.size();) {
    const auto& line = sol[i];
    const auto word = first_word(line);
    // A compound header absorbs its body.
    std::size_t end = i + 1;
    if (ends_with_colon(line) && word != "def" && word != "class") {
      while (end < sol.size() && sol[end].indent > line.indent) ++end;
    }
    const auto body = sol.subspan(i + 1, end - i - 1);
    const int count = static_cast<int>(end - i);
    const bool is_assign = !ends_with_colon(line) && assignment_op(line).has_value();

    if (is_assign && in_init) {
      auto names = assigned_names(sol.subspan(i, 1));
      groups.back().text.pop_back();  // reopen the sentence
      auto& text = groups.back().text;
      for (const auto& n : names) {
        if (text.find(tick(n)) == std::string::npos) text += " and " + tick(n);
      }
      text += ".";
      groups.back().lines += 1;
      i = end;
      continue;
    }
    in_init = false;

    std::string text;
    if (word == "def" && line.atoms.size() > 1) {
      const auto params = def_params(line);
      text = "Define " + tick(line.atoms[1].text) +
             (params.empty() ? " taking no input." : " taking " + join_ticked(params) + " as input.");
    } else if (word == "for") {
      const auto in = std::find_if(line.atoms.begin(), line.atoms.end(),
                                   [](const Atom& a) { return a.text == "in"; });
      const auto in_idx = static_cast<std::size_t>(in - line.atoms.begin());
      const auto updated = assigned_names(body);
      text = in != line.atoms.end() && in_idx > 1
                 ? "Go through each " + tick(span_text(line, 1, in_idx - 1)) + " in " +
                       tick(header_tail(line, in_idx + 1))
                 : "Loop over the data";
      text += updated.empty() ? " and handle it." : ", updating " + join_ticked(updated) + ".";
    } else if (word == "while") {
      const auto updated = assigned_names(body);
      text = "Repeat while " + tick(header_tail(line, 1)) + " holds" +
             (updated.empty() ? "." : ", updating " + join_ticked(updated) + ".");
    } else if (word == "if" || word == "elif" || word == "else") {
      text = word == "else" ? "Handle the remaining case."
                            : "Check whether " + tick(header_tail(line, 1)) + " and act on it.";
    } else if (word == "return") {
      text = line.atoms.size() > 1 ? "Return " + tick(span_text(line, 1, line.atoms.size() - 1)) + " as the result."
                                   : "Finish the function.";
    } else if (is_assign) {
      text = "Initialize " + join_ticked(assigned_names(sol.subspan(i, 1))) + ".";
      in_init = true;
    } else if (word == "print") {
      text = "Print " + tick(line.normalized.substr(std::min<std::size_t>(6, line.normalized.size()))) + ".";
      if (line.atoms.size() > 2 && line.atoms[1].text == "(" && line.atoms.back().text == ")") {
        text = "Print " + tick(span_text(line, 2, line.atoms.size() - 2)) + ".";
      }
    } else {
      text = "Run " + tick(line.normalized) + ".";
    }
    groups.push_back({std::move(text), count});
    i = end;
  }
  return groups;
}

const std::vector<std::string>& padding_subgoals() {
  static const std::vector<std::string> pad = {
      "Trace the program on a small example to confirm each step.",
      "Check edge cases such as an empty input.",
      "Compare the result with the expected output in the task.",
      "Read the task to identify the inputs and the expected output.",
  };
  return pad;
}

// ----- cloze fallback -----

struct ConceptBlank {
  std::string sentence;  // contains "@" where the marker goes
  std::vector<std::string> options;  // first is correct
};

const std::vector<ConceptBlank>& concept_blanks() {
  static const std::vector<ConceptBlank> blanks = {
      {"The lines inside a loop or function are grouped by @.", {"indentation", "semicolons", "braces"}},
      {"Lines at the same level run from @ to bottom.", {"top", "middle", "end"}},
      {"A variable holds the @ value assigned to it.", {"latest", "first", "largest"}},
  };
  return blanks;
}

const std::vector<std::string>& generic_identifiers() {
  static const std::vector<std::string> names = {"result", "count", "value", "item", "index", "total", "x", "i"};
  return names;
}

std::string marker(std::size_t i) { return "[[" + std::to_string(i) + "]]"; }

}  // namespace

std::vector<Atom> block_atoms(const Block& block) {
  std::vector<Atom> out;
  for (const auto& l : block.lines) out.insert(out.end(), l.atoms.begin(), l.atoms.end());
  return out;
}

std::string check_subgoals(const SubgoalList& list) {
  if (list.items.size() < kMinSubgoals || list.items.size() > kMaxSubgoals) {
    return "expected 4-6 subgoals, got " + std::to_string(list.items.size());
  }
  for (const auto& item : list.items) {
    if (trim(item).empty()) return "empty subgoal";
    if (item.size() > kMaxSubgoalLength) return "subgoal longer than 160 characters";
  }
  return {};
}

std::string check_block_explanation(const BlockExplanation& e, bool expect_contrast) {
  if (trim(e.behavior).empty() || trim(e.purpose).empty()) return "behavior and purpose are required";
  if (e.distractor_contrast.has_value() != expect_contrast) return "contrast presence mismatch";
  if (e.distractor_contrast && (trim(e.distractor_contrast->why_correct).empty() ||
                                trim(e.distractor_contrast->why_distractor_wrong).empty())) {
    return "contrast fields are required";
  }
  return {};
}

std::string check_atom_explanation(const AtomExplanation& e, const Atom& atom) {
  if (e.surface != atom.text) return "surface does not match the atom";
  if (trim(e.purpose).empty()) return "purpose is required";
  if (atom.kind != AtomKind::Punctuation && (!e.execution || trim(*e.execution).empty())) {
    return "execution is required for executing atoms";
  }
  return {};
}

std::string check_cloze(const ClozeQuestion& q) {
  const auto k = q.blanks.size();
  if (k < kMinClozeBlanks || k > kMaxClozeBlanks) return "expected 3-6 blanks";
  std::map<std::size_t, int> seen;
  const auto& t = q.template_text;
  for (std::size_t pos = t.find("[["); pos != std::string::npos; pos = t.find("[[", pos + 2)) {
    std::size_t j = pos + 2;
    std::size_t n = 0;
    bool digits = false;
    while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) {
      n = n * 10 + static_cast<std::size_t>(t[j] - '0');
      digits = true;
      ++j;
    }
    if (digits && t.compare(j, 2, "]]") == 0) ++seen[n];
  }
  for (std::size_t i = 1; i <= k; ++i) {
    if (seen[i] != 1) return "marker " + marker(i) + " must appear exactly once";
  }
  if (seen.size() != k) return "unexpected marker";
  for (const auto& b : q.blanks) {
    if (b.options.size() < kMinClozeOptions) return "each blank needs at least 3 options";
    if (b.correct_index < 0 || static_cast<std::size_t>(b.correct_index) >= b.options.size()) {
      return "correct_index out of range";
    }
    std::set<std::string> distinct;
    for (const auto& o : b.options) {
      if (trim(o).empty()) return "empty option";
      distinct.insert(o);
    }
    if (distinct.size() != b.options.size()) return "options must be distinct";
  }
  return {};
}

SubgoalList fallback_subgoals(std::span<const SourceLine> solution) {
  auto groups = structural_groups(solution);
  while (groups.size() > kMaxSubgoals) {
    // Merge the adjacent pair covering the fewest lines (earliest on ties).
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < groups.size(); ++i) {
      if (groups[i].lines + groups[i + 1].lines < groups[best].lines + groups[best + 1].lines) best = i;
    }
    auto& a = groups[best];
    auto& b = groups[best + 1];
    if (!a.text.empty() && a.text.back() == '.') a.text.pop_back();
    a.text += ", then " + lower_first(b.text);
    a.lines += b.lines;
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best + 1));
  }
  SubgoalList list;
  for (auto& g : groups) list.items.push_back(truncate(std::move(g.text), kMaxSubgoalLength));
  for (std::size_t i = 0; list.items.size() < kMinSubgoals; ++i) {
    list.items.push_back(padding_subgoals()[i]);
  }
  return list;
}

BlockExplanation fallback_block_explanation(const Block& block, const Block* paired_distractor) {
  BlockExplanation e{block.id, {}, {}, std::nullopt};
  std::vector<std::string> purposes;
  for (const auto& line : block.lines) {
    const auto d = describe_line(line);
    if (!e.behavior.empty()) e.behavior += " ";
    e.behavior += d.behavior;
    if (std::find(purposes.begin(), purposes.end(), d.purpose) == purposes.end()) {
      purposes.push_back(d.purpose);
    }
  }
  for (const auto& p : purposes) e.purpose += (e.purpose.empty() ? "" : " ") + p;
  if (e.behavior.empty()) e.behavior = "Holds no code.";
  if (e.purpose.empty()) e.purpose = "Keeps the program's structure.";
  if (paired_distractor && !paired_distractor->lines.empty() && !block.lines.empty()) {
    const auto& line = imitated_line(block, *paired_distractor);
    e.distractor_contrast = DistractorContrast{
        tick(line.normalized) + " at indent level " + std::to_string(line.indent) +
            " is what the solution needs here. " + describe_line(line).purpose,
        contrast_wrong(block, *paired_distractor)};
  }
  return e;
}

AtomExplanation fallback_atom_explanation(const Block& block, int atom_index) {
  const auto atoms = block_atoms(block);
  if (atom_index < 0 || static_cast<std::size_t>(atom_index) >= atoms.size()) {
    throw Error(ErrorCode::AtomOutOfRange, "atom index " + std::to_string(atom_index) +
                                               " out of range for block " + block.id);
  }
  return describe_atom(block, atoms, atom_index);
}

ClozeQuestion fallback_cloze(std::span<const Block> solution_blocks,
                             std::span<const BlockExplanation> explanations, std::uint64_t seed) {
  Xorshift64Star rng(seed);

  // Explanation text in solution order.
  std::vector<const Block*> ordered;
  for (const auto& b : solution_blocks) {
    if (b.kind != BlockKind::Distractor && b.solution_pos) ordered.push_back(&b);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Block* x, const Block* y) { return *x->solution_pos < *y->solution_pos; });
  std::string text;
  for (const Block* b : ordered) {
    const auto it = std::find_if(explanations.begin(), explanations.end(),
                                 [&](const BlockExplanation& e) { return e.block_id == b->id; });
    const auto behavior = it != explanations.end() ? it->behavior
                                                   : fallback_block_explanation(*b, nullptr).behavior;
    text += (text.empty() ? "" : " ") + behavior;
  }

  // Same-kind pools and blankable candidates (first occurrence order).
  std::map<AtomKind, std::vector<std::string>> pool;
  std::vector<std::pair<std::string, AtomKind>> candidates;
  for (const Block* b : ordered) {
    for (const auto& a : block_atoms(*b)) {
      auto& p = pool[a.kind];
      if (std::find(p.begin(), p.end(), a.text) == p.end()) p.push_back(a.text);
      if ((a.kind == AtomKind::Keyword || a.kind == AtomKind::Identifier) &&
          text.find(tick(a.text)) != std::string::npos &&
          std::none_of(candidates.begin(), candidates.end(),
                       [&](const auto& c) { return c.first == a.text; })) {
        candidates.emplace_back(a.text, a.kind);
      }
    }
  }

  // Pick k candidates by seeded shuffle.
  std::vector<std::string> order;
  for (const auto& c : candidates) order.push_back(c.first);
  seeded_shuffle(order, rng);
  const std::size_t k = std::min<std::size_t>(order.size(), 5);
  order.resize(k);

  struct Slot {
    std::size_t pos;
    std::string answer;
    AtomKind kind;
  };
  std::vector<Slot> slots;
  for (const auto& name : order) {
    const auto kind = std::find_if(candidates.begin(), candidates.end(),
                                   [&](const auto& c) { return c.first == name; })->second;
    slots.push_back({text.find(tick(name)), name, kind});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.pos < b.pos; });

  ClozeQuestion q;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    q.template_text += text.substr(cursor, s.pos - cursor) + marker(i + 1);
    cursor = s.pos + s.answer.size() + 2;

    std::vector<std::string> others;
    for (const auto& t : pool[s.kind]) {
      if (t != s.answer) others.push_back(t);
    }
    seeded_shuffle(others, rng);
    if (others.size() < kMinClozeOptions - 1) {
      std::vector<std::string> extra;
      if (s.kind == AtomKind::Keyword) {
        for (auto kw : keyword_list()) extra.emplace_back(kw);
      } else {
        extra = generic_identifiers();
      }
      seeded_shuffle(extra, rng);
      for (const auto& x : extra) {
        if (others.size() >= kMinClozeOptions - 1) break;
        if (x != s.answer && std::find(others.begin(), others.end(), x) == others.end()) {
          others.push_back(x);
        }
      }
    }
    std::vector<std::string> options = {s.answer};
    options.insert(options.end(), others.begin(), others.begin() + (kMinClozeOptions - 1));
    seeded_shuffle(options, rng);
    const auto at = std::find(options.begin(), options.end(), s.answer) - options.begin();
    q.blanks.push_back({std::move(options), static_cast<int>(at)});
  }
  q.template_text += text.substr(cursor);

  for (std::size_t c = 0; q.blanks.size() < kMinClozeBlanks; ++c) {
    const auto& concept_blank = concept_blanks()[c];
    auto sentence = concept_blank.sentence;
    sentence.replace(sentence.find('@'), 1, marker(q.blanks.size() + 1));
    q.template_text += (q.template_text.empty() ? "" : " ") + sentence;
    auto options = concept_blank.options;
    seeded_shuffle(options, rng);
    const auto at = std::find(options.begin(), options.end(), concept_blank.options.front()) - options.begin();
    q.blanks.push_back({std::move(options), static_cast<int>(at)});
  }
  return q;
}

ClozeGrade grade_cloze(const ClozeQuestion& q, std::span<const int> answers) {
  if (answers.size() != q.blanks.size()) {
    throw Error(ErrorCode::AnswerCountMismatch, "expected " + std::to_string(q.blanks.size()) +
                                                    " answers, got " + std::to_string(answers.size()));
  }
  ClozeGrade g{true, {}};
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const bool ok = answers[i] == q.blanks[i].correct_index;
    g.per_blank.push_back(ok);
    g.correct = g.correct && ok;
  }
  return g;
}

std::optional<json> extract_json(std::string_view text) {
  const auto start = text.find_first_of("[{");
  if (start == std::string_view::npos) return std::nullopt;
  const char open = text[start];
  const char close = open == '[' ? ']' : '}';
  // Try the longest candidate first, shrinking to each earlier closer.
  for (auto end = text.rfind(close); end != std::string_view::npos && end > start;
       end = text.rfind(close, end - 1)) {
    const auto parsed = json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    if (end == 0) break;
  }
  return std::nullopt;
}

std::optional<ProviderResponse> Explainer::complete_validated(
    const ProviderRequest& request, const std::function<bool(const std::string&)>& accept) {
  const auto key = ExplanationCache::key_for(request.template_id, request.rendered_prompt);
  if (auto hit = cache_.lookup(key); hit && accept(*hit)) {
    return ProviderResponse{*hit, provider_.name(), true};
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto text = provider_.complete(request);
    if (text && accept(*text)) {
      cache_.store(key, *text);
      return ProviderResponse{*text, provider_.name(), false};
    }
  }
  return std::nullopt;
}

namespace {

std::string render_lines(std::span<const SourceLine> lines) {
  std::vector<ProgramLine> out;
  for (const auto& l : lines) out.push_back(key_of(l));
  return render_program(out);
}

std::vector<SourceLine> solution_source_lines(std::span<const Block> blocks) {
  std::vector<const Block*> ordered;
  for (const auto& b : blocks) {
    if (b.kind != BlockKind::Distractor && b.solution_pos) ordered.push_back(&b);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Block* x, const Block* y) { return *x->solution_pos < *y->solution_pos; });
  std::vector<SourceLine> lines;
  for (const Block* b : ordered) lines.insert(lines.end(), b->lines.begin(), b->lines.end());
  return lines;
}

}  // namespace

SubgoalList Explainer::generate_subgoals(const Problem& problem, std::span<const Block> solution_blocks) {
  const auto lines = solution_source_lines(solution_blocks);
  ProviderRequest req;
  req.template_id = "subgoals.v1";
  req.rendered_prompt =
      "Break the programming task below into 4 to 6 short subgoals a novice can follow. "
      "Each subgoal is one sentence of at most 160 characters and must not contain code blocks. "
      "Reply with a JSON array of strings and nothing else.\n\nTask:\n" +
      problem.statement + "\n\nReference solution:\n" + render_lines(lines);
  std::optional<SubgoalList> parsed;
  const auto ok = complete_validated(req, [&](const std::string& text) {
    const auto j = extract_json(text);
    if (!j || !j->is_array()) return false;
    SubgoalList list;
    for (const auto& item : *j) {
      if (!item.is_string()) return false;
      list.items.push_back(trim(item.get<std::string>()));
    }
    if (!check_subgoals(list).empty()) return false;
    parsed = std::move(list);
    return true;
  });
  return ok ? *parsed : fallback_subgoals(lines);
}

BlockExplanation Explainer::generate_block_explanation(const Block& block, const Block* paired_distractor,
                                                       std::string_view solution_text) {
  if (block.kind == BlockKind::Distractor) {
    throw Error(ErrorCode::DistractorNotExplainable,
                "distractor blocks are explained through their paired block");
  }
  const bool contrast = paired_distractor != nullptr;
  ProviderRequest req;
  req.template_id = "block.v1";
  req.rendered_prompt =
      "Explain one block of a Python solution to a novice. Reply with a JSON object with string "
      "fields \"behavior\" (what the block does when it runs) and \"purpose\" (why the solution needs it)" +
      std::string(contrast ? ", plus \"why_correct\" and \"why_distractor_wrong\" comparing the block "
                             "with the incorrect alternative shown below"
                           : "") +
      ".\n\nSolution:\n" + std::string(solution_text) + "\n\nBlock:\n" + block_text(block) +
      (contrast ? "\n\nIncorrect alternative:\n" + block_text(*paired_distractor) : std::string());
  std::optional<BlockExplanation> parsed;
  const auto ok = complete_validated(req, [&](const std::string& text) {
    const auto j = extract_json(text);
    if (!j || !j->is_object()) return false;
    BlockExplanation e{block.id, {}, {}, std::nullopt};
    try {
      e.behavior = j->at("behavior").get<std::string>();
      e.purpose = j->at("purpose").get<std::string>();
      if (contrast) {
        e.distractor_contrast = DistractorContrast{j->at("why_correct").get<std::string>(),
                                                   j->at("why_distractor_wrong").get<std::string>()};
      }
    } catch (const json::exception&) {
      return false;
    }
    if (!check_block_explanation(e, contrast).empty()) return false;
    parsed = std::move(e);
    return true;
  });
  return ok ? *parsed : fallback_block_explanation(block, paired_distractor);
}

AtomExplanation Explainer::generate_atom_explanation(const Block& block, int atom_index) {
  const auto atoms = block_atoms(block);
  if (atom_index < 0 || static_cast<std::size_t>(atom_index) >= atoms.size()) {
    throw Error(ErrorCode::AtomOutOfRange, "atom index " + std::to_string(atom_index) +
                                               " out of range for block " + block.id);
  }
  const auto& atom = atoms[static_cast<std::size_t>(atom_index)];
  ProviderRequest req;
  req.template_id = "atom.v1";
  req.rendered_prompt =
      "Explain one element of a line of Python to a novice. Reply with a JSON object with fields "
      "\"surface\" (exactly the element's text), \"execution\" (what it does when the line runs, or "
      "null if it does nothing by itself) and \"purpose\" (why it is there).\n\nCode:\n" +
      block_text(block) + "\n\nElement #" + std::to_string(atom_index) + " (" +
      std::string(to_string(atom.kind)) + "): " + atom.text;
  std::optional<AtomExplanation> parsed;
  const auto ok = complete_validated(req, [&](const std::string& text) {
    const auto j = extract_json(text);
    if (!j || !j->is_object()) return false;
    AtomExplanation e{block.id, atom_index, {}, std::nullopt, {}};
    try {
      e.surface = j->at("surface").get<std::string>();
      e.purpose = j->at("purpose").get<std::string>();
      if (j->contains("execution") && !j->at("execution").is_null()) {
        e.execution = j->at("execution").get<std::string>();
      }
    } catch (const json::exception&) {
      return false;
    }
    if (!check_atom_explanation(e, atom).empty()) return false;
    parsed = std::move(e);
    return true;
  });
  return ok ? *parsed : describe_atom(block, atoms, atom_index);
}

ClozeQuestion Explainer::generate_cloze(std::span<const Block> solution_blocks,
                                        std::span<const BlockExplanation> explanations,
                                        std::uint64_t seed) {
  ProviderRequest req;
  req.template_id = "cloze.v1";
  std::string notes;
  for (const auto& e : explanations) notes += "- " + e.behavior + "\n";
  req.rendered_prompt =
      "Write a short explanation of how the solution below works, leaving 3 to 6 key words blank. "
      "Mark the blanks [[1]], [[2]], ... in order. For each blank give at least 3 distinct options of the "
      "same kind (keyword for keyword, variable name for variable name) with exactly one correct. Reply "
      "with a JSON object {\"template\": string, \"blanks\": [{\"options\": [string], \"correct_index\": "
      "int}]}.\n\nSolution:\n" +
      render_lines(solution_source_lines(solution_blocks)) + "\nNotes:\n" + notes;
  std::optional<ClozeQuestion> parsed;
  const auto ok = complete_validated(req, [&](const std::string& text) {
    const auto j = extract_json(text);
    if (!j || !j->is_object()) return false;
    ClozeQuestion q;
    try {
      q = j->get<ClozeQuestion>();
    } catch (const std::exception&) {
      return false;
    }
    if (!check_cloze(q).empty()) return false;
    parsed = std::move(q);
    return true;
  });
  return ok ? *parsed : fallback_cloze(solution_blocks, explanations, seed);
}

void to_json(json& j, const SubgoalList& list) { j = json{{"items", list.items}}; }

void from_json(const json& j, SubgoalList& list) {
  list.items = (j.is_array() ? j : j.at("items")).get<std::vector<std::string>>();
}

void to_json(json& j, const BlockExplanation& e) {
  j = json{{"block_id", e.block_id}, {"behavior", e.behavior}, {"purpose", e.purpose}};
  if (e.distractor_contrast) {
    j["distractor_contrast"] = {{"why_correct", e.distractor_contrast->why_correct},
                                {"why_distractor_wrong", e.distractor_contrast->why_distractor_wrong}};
  } else {
    j["distractor_contrast"] = nullptr;
  }
}

void from_json(const json& j, BlockExplanation& e) {
  e.block_id = j.at("block_id").get<std::string>();
  e.behavior = j.at("behavior").get<std::string>();
  e.purpose = j.at("purpose").get<std::string>();
  e.distractor_contrast.reset();
  if (j.contains("distractor_contrast") && !j.at("distractor_contrast").is_null()) {
    const auto& c = j.at("distractor_contrast");
    e.distractor_contrast = DistractorContrast{c.at("why_correct").get<std::string>(),
                                               c.at("why_distractor_wrong").get<std::string>()};
  }
}

void to_json(json& j, const AtomExplanation& e) {
  j = json{{"block_id", e.block_id}, {"atom_index", e.atom_index}, {"surface", e.surface},
           {"purpose", e.purpose}};
  j["execution"] = e.execution ? json(*e.execution) : json(nullptr);
}

void from_json(const json& j, AtomExplanation& e) {
  e.block_id = j.at("block_id").get<std::string>();
  e.atom_index = j.at("atom_index").get<int>();
  e.surface = j.at("surface").get<std::string>();
  e.purpose = j.at("purpose").get<std::string>();
  e.execution.reset();
  if (j.contains("execution") && !j.at("execution").is_null()) e.execution = j.at("execution").get<std::string>();
}

void to_json(json& j, const ClozeQuestion& q) {
  j = json{{"template", q.template_text}, {"blanks", json::array()}};
  for (const auto& b : q.blanks) {
    j["blanks"].push_back({{"options", b.options}, {"correct_index", b.correct_index}});
  }
}

void from_json(const json& j, ClozeQuestion& q) {
  q.template_text = j.at("template").get<std::string>();
  q.blanks.clear();
  for (const auto& b : j.at("blanks")) {
    q.blanks.push_back({b.at("options").get<std::vector<std::string>>(), b.at("correct_index").get<int>()});
  }
}

void to_json(json& j, const ClozeGrade& g) {
  j = json{{"correct", g.correct}, {"per_blank", g.per_blank}};
}

void to_json(json& j, const ExplanationBundle& b) {
  j = json{{"subgoals", b.subgoals}, {"blocks", b.blocks}, {"atoms", b.atoms}};
}

}  // namespace scaffold
