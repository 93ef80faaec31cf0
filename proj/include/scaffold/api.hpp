#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "scaffold/core_model.hpp"
#include "scaffold/error.hpp"
#include "scaffold/session.hpp"

namespace scaffold {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// {code, message, http_status}
nlohmann::json api_error_body(ErrorCode code, std::string_view message);

// Wire views. These never carry block kinds, solution positions of
// non-fixed blocks, distractor pairings or answer keys.
nlohmann::json public_puzzle_view(const ParsonsPuzzle& puzzle);
nlohmann::json public_session_view(const Session& session);
nlohmann::json public_problem_view(const Problem& problem);
nlohmann::json public_cloze_view(const ClozeQuestion& cloze);

/// Transport-independent request dispatcher; the HTTP server and tests
/// both go through it. Domain errors map to their documented status and
/// code; malformed bodies are 400 invalid_request.
class Api {
 public:
  explicit Api(SessionStore& store) : store_(store) {}

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

 private:
  ApiResponse route(std::string_view method, std::string_view path, const nlohmann::json& body);

  SessionStore& store_;
};

}  // namespace scaffold
