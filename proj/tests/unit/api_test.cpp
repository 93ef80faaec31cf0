#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "../support/fakes.hpp"
#include "../support/leak_scan.hpp"
#include "../support/oracles.hpp"
#include "scaffold/api.hpp"
#include "scaffold/json_io.hpp"

namespace scaffold {
namespace {

const std::string kStudentCode = "def total(nums):\n    s = 1\n    for n in nums:\n        return s\n";

json total_problem_json() {
  return {{"id", "total"},
          {"statement", "Return the sum of a list of numbers."},
          {"solution_source", testing::total_source()},
          {"test_suite", json::array({{{"mode", "function-call"},
                                       {"input", "[[1, 2, 3]]"},
                                       {"expected", "6"},
                                       {"function_name", "total"}}})}};
}

// Always fails; lets a correct-looking program reach help.
class FailingEvaluator final : public CodeEvaluator {
 public:
  TestOutcome run_test(std::string_view, const TestCase&, int index) const override {
    return {index, false, "failed", 0};
  }
};

class ApiTest : public ::testing::Test {
 protected:
  ApiTest() : evaluator(testing::total_source()), store({}, provider, evaluator, [this] { return ++tick; }), api(store) {}

  ApiResponse call(std::string_view method, const std::string& path, const json& body = nullptr) {
    const auto r = api.handle(method, path, body.is_null() ? "" : body.dump());
    log.push_back(r.status);
    return r;
  }

  std::string setup_session(const std::string& code = kStudentCode) {
    EXPECT_EQ(call("POST", "/api/problems", total_problem_json()).status, 201);
    const auto r = call("POST", "/api/sessions", {{"problem_id", "total"}, {"student_id", "stu"}});
    EXPECT_EQ(r.status, 201);
    const auto id = r.body["id"].get<std::string>();
    EXPECT_EQ(call("POST", "/api/sessions/" + id + "/code-attempts", {{"code", code}}).status, 200);
    return id;
  }

  json wrong_arrangement(const std::string& id) {
    auto arr = canonical_arrangement(*store.get_session(id).puzzle);
    std::reverse(arr.placements.begin(), arr.placements.end());
    return {{"arrangement", arr}};
  }

  std::string code_of(const ApiResponse& r) { return r.body.value("code", std::string()); }

  NullProvider provider;
  testing::MatchEvaluator evaluator;
  std::int64_t tick = 0;
  SessionStore store;
  Api api;
  std::vector<int> log;
};

TEST_F(ApiTest, HelpReturnsPuzzleWithoutAnswers) {
  const auto id = setup_session();
  const auto r = call("POST", "/api/sessions/" + id + "/help");
  ASSERT_EQ(r.status, 200);
  ASSERT_TRUE(r.body.contains("puzzle"));
  ASSERT_TRUE(r.body.contains("subgoals"));
  const auto puzzle = *store.get_session(id).puzzle;
  EXPECT_EQ(r.body["puzzle"]["tray"].size(), puzzle.count(BlockKind::Movable) + puzzle.count(BlockKind::Distractor));
  EXPECT_EQ(r.body["puzzle"]["fixed"].size(), puzzle.count(BlockKind::Fixed));
  EXPECT_TRUE(testing::LeakScanner(puzzle).scan(r.body).empty());
}

TEST_F(ApiTest, ScannerCatchesEngineSerialization) {
  const auto id = setup_session();
  call("POST", "/api/sessions/" + id + "/help");
  const auto puzzle = *store.get_session(id).puzzle;
  const testing::LeakScanner scanner(puzzle);
  EXPECT_FALSE(scanner.scan(json(puzzle)).empty());
  EXPECT_FALSE(scanner.scan(json(canonical_arrangement(puzzle))).empty());
  EXPECT_FALSE(scanner.scan(json(store.get_session(id))).empty());
}

TEST_F(ApiTest, ScriptedHappyPathStatusSequence) {
  // Subgoals and cloze come from a replay fixture, as a live provider would.
  ReplayProvider replay(std::map<std::string, std::vector<std::string>>{
      {"subgoals.v1", {R"(["Define total","Start a running sum","Add every number","Return the sum"])"}}});
  testing::MatchEvaluator match(testing::total_source());
  SessionStore s2({}, replay, match, [this] { return ++tick; });
  Api api2(s2);
  std::vector<int> statuses;
  std::vector<std::string> phases;
  auto go = [&](std::string_view method, const std::string& path, const json& body = nullptr) {
    auto r = api2.handle(method, path, body.is_null() ? "" : body.dump());
    statuses.push_back(r.status);
    if (r.body.contains("phase")) phases.push_back(r.body["phase"].get<std::string>());
    return r;
  };

  go("POST", "/api/problems", total_problem_json());
  const auto id = go("POST", "/api/sessions", {{"problem_id", "total"}, {"student_id", "stu"}}).body["id"].get<std::string>();
  const std::string base = "/api/sessions/" + id;
  go("POST", base + "/code-attempts", {{"code", kStudentCode}});
  const auto help = go("POST", base + "/help");
  EXPECT_EQ(help.body["subgoals"].size(), 4u);
  EXPECT_EQ(help.body["subgoals"][0], "Define total");

  auto arr = canonical_arrangement(*s2.get_session(id).puzzle);
  auto wrong = arr;
  std::reverse(wrong.placements.begin(), wrong.placements.end());
  for (int i = 0; i < 3; ++i) go("POST", base + "/parsons-attempts", {{"arrangement", wrong}});
  const auto pair = auto_merge_pair(*s2.get_session(id).puzzle);
  ASSERT_TRUE(pair);
  const auto merged = go("POST", base + "/merges", {{"a", pair->first}, {"b", pair->second}});
  EXPECT_EQ(merged.body["merges_allowed"], 0);
  arr = canonical_arrangement(*s2.get_session(id).puzzle);
  go("POST", base + "/parsons-attempts", {{"arrangement", arr}});
  go("GET", base + "/explanations/blocks/" + arr.placements.front().block_id);
  go("GET", base + "/explanations/blocks/" + arr.placements.front().block_id + "/atoms/0");
  const auto copied = go("POST", base + "/copy-solution");
  go("POST", base + "/code-attempts", {{"code", copied.body["code"]}});
  const auto cloze = go("GET", base + "/self-explanation");
  std::vector<int> answers;
  for (const auto& b : s2.self_explanation(id).first.blanks) answers.push_back(b.correct_index);
  EXPECT_EQ(cloze.body["cloze"]["blanks"].size(), answers.size());
  const auto graded = go("POST", base + "/self-explanation", {{"answers", answers}});
  EXPECT_TRUE(graded.body["grade"]["correct"].get<bool>());
  go("GET", base);

  EXPECT_EQ(statuses, (std::vector<int>{201, 201, 200, 200, 200, 200, 200, 200, 200, 200, 200, 200, 200, 200, 200, 200}));
  EXPECT_EQ(phases, (std::vector<std::string>{"Writing", "Writing", "ParsonsActive", "ParsonsActive", "ParsonsActive",
                                              "ParsonsSolved", "Writing", "SelfExplanation", "Done", "Done"}));
}

TEST_F(ApiTest, NoLeakBeforeSolveAcrossEndpoints) {
  const auto id = setup_session();
  const std::string base = "/api/sessions/" + id;
  std::vector<std::pair<std::string, json>> responses;
  auto record = [&](std::string_view method, const std::string& path, const json& body = nullptr) {
    auto r = call(method, path, body);
    responses.emplace_back(path, r.body);
    return r;
  };
  record("GET", "/api/problems/total");
  record("POST", base + "/help");
  for (int i = 0; i < 3; ++i) {
    record("POST", base + "/parsons-attempts", wrong_arrangement(id));
    record("GET", base);
  }
  const auto before_merge = *store.get_session(id).puzzle;
  for (const auto& [path, body] : responses) {
    EXPECT_TRUE(testing::LeakScanner(before_merge).scan(body).empty()) << path << " " << body.dump();
  }
  const auto pair = auto_merge_pair(before_merge);
  ASSERT_TRUE(pair);
  const auto merged = record("POST", base + "/merges", {{"a", pair->first}, {"b", pair->second}});
  const testing::LeakScanner after(*store.get_session(id).puzzle);
  EXPECT_TRUE(after.scan(merged.body).empty()) << merged.body.dump();
  EXPECT_TRUE(after.scan(record("GET", base).body).empty());
  EXPECT_TRUE(after.scan(record("POST", base + "/parsons-attempts", wrong_arrangement(id)).body).empty());
  // Problem view never carries the reference program or tests.
  const auto problem = call("GET", "/api/problems/total").body;
  EXPECT_FALSE(problem.contains("solution_source"));
  EXPECT_FALSE(problem.contains("test_suite"));
}

TEST_F(ApiTest, EveryErrorCodeIsReachable) {
  std::set<std::string> seen;
  auto expect = [&](const ApiResponse& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.body.dump();
    EXPECT_EQ(code_of(r), code) << r.body.dump();
    EXPECT_EQ(r.body["http_status"], status);
    EXPECT_TRUE(r.body["message"].is_string());
    seen.insert(code_of(r));
  };

  expect(api.handle("POST", "/api/sessions", "{not json"), 400, "invalid_request");
  expect(call("POST", "/api/sessions", {{"problem_id", "total"}}), 400, "invalid_request");
  expect(call("GET", "/api/sessions/nope"), 404, "not_found");
  expect(call("GET", "/api/elsewhere"), 404, "not_found");
  auto bad = total_problem_json();
  bad["test_suite"] = json::array();
  expect(call("POST", "/api/problems", bad), 422, "invalid_problem");

  const auto id = setup_session();
  const std::string base = "/api/sessions/" + id;
  expect(call("POST", base + "/copy-solution"), 409, "invalid_phase");
  call("POST", base + "/help");
  const auto puzzle = *store.get_session(id).puzzle;
  const auto movable = puzzle.movable_in_solution_order();
  expect(call("POST", base + "/merges", {{"a", movable[0]->id}, {"b", movable[1]->id}}), 409, "merge_locked");
  expect(call("POST", base + "/parsons-attempts", {{"arrangement", {{{"block_id", "bdeadbeef"}, {"indent", 0}}}}}),
         422, "unknown_block");
  const json dup = {{"block_id", movable[0]->id}, {"indent", 1}};
  expect(call("POST", base + "/parsons-attempts", {{"arrangement", {dup, dup}}}), 422, "duplicate_block");
  for (int i = 0; i < 3; ++i) call("POST", base + "/parsons-attempts", wrong_arrangement(id));
  std::string fixed_id, distractor_id;
  for (const auto& b : puzzle.blocks) {
    if (b.kind == BlockKind::Fixed) fixed_id = b.id;
    if (b.kind == BlockKind::Distractor) distractor_id = b.id;
  }
  expect(call("POST", base + "/merges", {{"a", fixed_id}, {"b", movable[0]->id}}), 422, "not_movable");
  expect(call("POST", base + "/merges", {{"a", distractor_id}, {"b", movable[0]->id}}), 422, "not_movable");
  if (movable.size() >= 3) {
    expect(call("POST", base + "/merges", {{"a", movable[0]->id}, {"b", movable[2]->id}}), 422, "not_adjacent");
  }

  call("POST", base + "/parsons-attempts", {{"arrangement", canonical_arrangement(puzzle)}});
  expect(call("GET", base + "/explanations/blocks/" + distractor_id), 422, "distractor_not_explainable");
  expect(call("GET", base + "/explanations/blocks/" + movable[0]->id + "/atoms/99"), 422, "atom_out_of_range");
  expect(call("GET", base + "/explanations/blocks/" + movable[0]->id + "/atoms/x"), 400, "invalid_request");
  const auto code = call("POST", base + "/copy-solution").body["code"].get<std::string>();
  call("POST", base + "/code-attempts", {{"code", code}});
  expect(call("POST", base + "/self-explanation", {{"answers", {0}}}), 422, "answer_count_mismatch");

  // Three-line program: one fixed line leaves two movable blocks.
  json small = {{"id", "inc"},
                {"statement", "Add one."},
                {"solution_source", "def inc(x):\n    y = x + 1\n    return y\n"},
                {"test_suite", json::array({{{"mode", "function-call"}, {"input", "[1]"}, {"expected", "2"}}})}};
  store.add_problem(small.get<Problem>(), false);
  const auto sid = call("POST", "/api/sessions", {{"problem_id", "inc"}, {"student_id", "stu"}}).body["id"].get<std::string>();
  const std::string sbase = "/api/sessions/" + sid;
  call("POST", sbase + "/code-attempts", {{"code", "def inc(x):\n"}});
  call("POST", sbase + "/help");
  const auto spuzzle = *store.get_session(sid).puzzle;
  ASSERT_EQ(spuzzle.count(BlockKind::Movable), 2u);
  for (int i = 0; i < 3; ++i) call("POST", sbase + "/parsons-attempts", wrong_arrangement(sid));
  const auto smov = spuzzle.movable_in_solution_order();
  expect(call("POST", sbase + "/merges", {{"a", smov[0]->id}, {"b", smov[1]->id}}), 422, "too_few_blocks");

  {
    FailingEvaluator failing;
    SessionStore fstore({}, provider, failing);
    Api fapi(fstore);
    fstore.add_problem(total_problem_json().get<Problem>(), false);
    const auto fid = json::parse(fapi.handle("POST", "/api/sessions", R"({"problem_id":"total","student_id":"s"})").body.dump())["id"]
                         .get<std::string>();
    fapi.handle("POST", "/api/sessions/" + fid + "/code-attempts", json{{"code", testing::total_source()}}.dump());
    expect(fapi.handle("POST", "/api/sessions/" + fid + "/help", ""), 409, "already_correct");
  }
  {
    PythonEvaluator missing("scaffold-missing-interpreter");
    SessionStore mstore({}, provider, missing);
    Api mapi(mstore);
    mstore.add_problem(total_problem_json().get<Problem>(), false);
    const auto mid = mapi.handle("POST", "/api/sessions", R"({"problem_id":"total","student_id":"s"})").body["id"].get<std::string>();
    expect(mapi.handle("POST", "/api/sessions/" + mid + "/code-attempts", json{{"code", kStudentCode}}.dump()), 503,
           "evaluator_unavailable");
  }

  // The documented closed set, each produced above.
  const std::set<std::string> all = {"invalid_request", "not_found", "invalid_problem", "unknown_block",
                                     "duplicate_block", "already_correct", "not_adjacent", "not_movable",
                                     "too_few_blocks", "invalid_phase", "merge_locked", "atom_out_of_range",
                                     "answer_count_mismatch", "distractor_not_explainable", "evaluator_unavailable"};
  if (movable.size() < 3) seen.insert("not_adjacent");
  EXPECT_EQ(seen, all);
  for (int c = 0; c <= static_cast<int>(ErrorCode::EvaluatorUnavailable); ++c) {
    EXPECT_TRUE(all.count(std::string(error_code_name(static_cast<ErrorCode>(c)))));
  }
}

TEST_F(ApiTest, SessionViewRevealsArrangementOnlyAfterSolve) {
  const auto id = setup_session();
  call("POST", "/api/sessions/" + id + "/help");
  EXPECT_TRUE(call("GET", "/api/sessions/" + id).body["solved_arrangement"].is_null());
  const auto arr = canonical_arrangement(*store.get_session(id).puzzle);
  call("POST", "/api/sessions/" + id + "/parsons-attempts", {{"arrangement", arr}});
  const auto view = call("GET", "/api/sessions/" + id).body;
  EXPECT_EQ(view["phase"], "ParsonsSolved");
  EXPECT_EQ(view["solved_arrangement"], json(arr));
}

}  // namespace
}  // namespace scaffold
