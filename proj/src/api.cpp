#include "scaffold/api.hpp"

#include <algorithm>
#include <charconv>
#include <vector>

#include "scaffold/json_io.hpp"

namespace scaffold {

namespace {

std::vector<std::string> split_path(std::string_view path) {
  if (const auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = std::min(path.find('/', start), path.size());
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

json line_view(const SourceLine& line, int indent_key_value, const char* indent_key) {
  return {{"text", line.normalized}, {indent_key, indent_key_value}, {"atoms", line.atoms}};
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw Error(ErrorCode::InvalidRequest, std::string("missing field '") + key + "'");
  }
  return body.at(key).get<T>();
}

int parse_index(const std::string& text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidRequest, "atom index must be an integer");
  }
  return value;
}

ApiResponse ok(json body, int status = 200) { return {status, std::move(body)}; }

}  // namespace

json api_error_body(ErrorCode code, std::string_view message) {
  return {{"code", error_code_name(code)}, {"message", message}, {"http_status", error_http_status(code)}};
}

json public_puzzle_view(const ParsonsPuzzle& puzzle) {
  json fixed = json::array();
  std::vector<const Block*> fixed_blocks;
  for (const auto& b : puzzle.blocks) {
    if (b.kind == BlockKind::Fixed) fixed_blocks.push_back(&b);
  }
  std::sort(fixed_blocks.begin(), fixed_blocks.end(),
            [](const Block* a, const Block* b) { return *a->solution_pos < *b->solution_pos; });
  for (const Block* b : fixed_blocks) {
    json lines = json::array();
    for (const auto& l : b->lines) lines.push_back(line_view(l, l.indent, "indent"));
    fixed.push_back({{"id", b->id}, {"position", *b->solution_pos}, {"lines", lines}});
  }
  // The tray shows the seeded order and only relative indentation.
  json tray = json::array();
  for (const auto& id : puzzle.tray_order) {
    const Block* b = puzzle.find_block(id);
    if (!b) continue;
    json lines = json::array();
    for (const auto& l : b->lines) lines.push_back(line_view(l, l.indent - b->base_indent(), "rel_indent"));
    tray.push_back({{"id", b->id}, {"lines", lines}});
  }
  return {{"puzzle_id", puzzle.puzzle_id},
          {"problem_id", puzzle.problem_id},
          {"solution_line_count", puzzle.solution_line_count},
          {"merges_applied", puzzle.merges_applied},
          {"fixed", fixed},
          {"tray", tray}};
}

json public_cloze_view(const ClozeQuestion& cloze) {
  json blanks = json::array();
  for (const auto& b : cloze.blanks) blanks.push_back({{"options", b.options}});
  return {{"template", cloze.template_text}, {"blanks", blanks}};
}

json public_session_view(const Session& s) {
  json view = {
      {"id", s.id},
      {"problem_id", s.problem_id},
      {"student_id", s.student_id},
      {"phase", to_string(s.phase)},
      {"latest_code", s.latest_code},
      {"parsons_failures", s.parsons_failures},
      {"merges_allowed", s.merges_allowed},
      {"used_parsons_help", s.used_parsons_help},
      {"help_count", s.help_count},
      {"subgoals", s.subgoals ? json(s.subgoals->items) : json(nullptr)},
      {"puzzle", s.puzzle ? public_puzzle_view(*s.puzzle) : json(nullptr)},
      {"created_at", s.created_at},
      {"updated_at", s.updated_at},
      {"last_seq", s.last_seq},
  };
  // Once solved, the student's own correct arrangement is safe to echo.
  const bool solved = s.phase == Phase::ParsonsSolved || s.phase == Phase::SelfExplanation;
  view["solved_arrangement"] = solved && s.solved_arrangement ? json(*s.solved_arrangement) : json(nullptr);
  return view;
}

json public_problem_view(const Problem& p) {
  return {{"id", p.id},
          {"statement", p.statement},
          {"title", p.title},
          {"author", p.author},
          {"test_count", p.test_suite.size()}};
}

ApiResponse Api::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    json parsed = json::object();
    if (!body.empty()) parsed = json::parse(body);
    return route(method, path, parsed);
  } catch (const Error& e) {
    return {error_http_status(e.code()), api_error_body(e.code(), e.what())};
  } catch (const json::exception& e) {
    return {400, api_error_body(ErrorCode::InvalidRequest, e.what())};
  } catch (const std::exception& e) {
    // Not a domain failure: storage or internal fault.
    return {500, {{"code", "internal"}, {"message", e.what()}, {"http_status", 500}}};
  }
}

ApiResponse Api::route(std::string_view method, std::string_view path, const json& body) {
  const auto p = split_path(path);
  const bool get = method == "GET";
  const bool post = method == "POST";
  auto not_found = [&]() -> ApiResponse {
    throw Error(ErrorCode::NotFound, "no route " + std::string(method) + " " + std::string(path));
  };
  if (p.size() < 2 || p[0] != "api") return not_found();

  if (p[1] == "problems") {
    if (p.size() == 2 && post) {
      return ok(public_problem_view(store_.add_problem(body.get<Problem>())), 201);
    }
    if (p.size() == 3 && get) return ok(public_problem_view(store_.get_problem(p[2])));
    return not_found();
  }
  if (p[1] != "sessions") return not_found();

  if (p.size() == 2 && post) {
    const auto s = store_.create_session(field<std::string>(body, "problem_id"),
                                         field<std::string>(body, "student_id"));
    return ok(public_session_view(s), 201);
  }
  if (p.size() < 3) return not_found();
  const auto& id = p[2];
  if (p.size() == 3 && get) return ok(public_session_view(store_.get_session(id)));
  if (p.size() < 4) return not_found();
  const auto& action = p[3];

  if (p.size() == 4 && post) {
    if (action == "code-attempts") {
      const auto result = store_.submit_code(id, field<std::string>(body, "code"));
      return ok({{"result", result}, {"phase", to_string(store_.get_session(id).phase)}});
    }
    if (action == "help") {
      const auto help = store_.request_help(id);
      return ok({{"puzzle", public_puzzle_view(help.puzzle)}, {"subgoals", help.subgoals.items}});
    }
    if (action == "parsons-attempts") {
      const json arr = body.contains("arrangement") ? body.at("arrangement") : body;
      const auto result = store_.submit_parsons(id, arr.get<Arrangement>());
      const auto s = store_.get_session(id);
      return ok({{"result", result},
                 {"phase", to_string(s.phase)},
                 {"parsons_failures", s.parsons_failures},
                 {"merges_allowed", s.merges_allowed}});
    }
    if (action == "merges") {
      const auto puzzle = store_.request_merge(id, field<std::string>(body, "a"), field<std::string>(body, "b"));
      return ok({{"puzzle", public_puzzle_view(puzzle)},
                 {"merges_allowed", store_.get_session(id).merges_allowed}});
    }
    if (action == "copy-solution") {
      const auto code = store_.copy_solution(id);
      return ok({{"code", code}, {"phase", to_string(store_.get_session(id).phase)}});
    }
    if (action == "self-explanation") {
      const auto r = store_.submit_self_explanation(id, field<std::vector<int>>(body, "answers"));
      return ok({{"grade", r.grade}, {"phase", to_string(r.phase)}});
    }
    return not_found();
  }

  if (get && action == "self-explanation" && p.size() == 4) {
    const auto [cloze, puzzle] = store_.self_explanation(id);
    const auto s = store_.get_session(id);
    // The solved program is shown again, without explanations.
    return ok({{"cloze", public_cloze_view(cloze)},
               {"puzzle", public_puzzle_view(puzzle)},
               {"solved_arrangement", s.solved_arrangement ? json(*s.solved_arrangement) : json(nullptr)}});
  }
  if (get && action == "explanations" && p.size() >= 6 && p[4] == "blocks") {
    const auto& block_id = p[5];
    if (p.size() == 6) return ok(store_.explain_block(id, block_id));
    if (p.size() == 8 && p[6] == "atoms") return ok(store_.explain_atom(id, block_id, parse_index(p[7])));
  }
  return not_found();
}

}  // namespace scaffold
