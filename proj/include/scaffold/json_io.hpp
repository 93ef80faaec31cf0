#pragma once

// Canonical JSON encodings (snake_case) shared by the HTTP API, the CLI and
// golden fixtures. Decoders throw nlohmann::json::exception on malformed
// input and Error(InvalidRequest) on out-of-domain enum values.

#include "json.hpp"

#include "scaffold/code_align.hpp"
#include "scaffold/core_model.hpp"
#include "scaffold/grader.hpp"

namespace scaffold {

using nlohmann::json;

void to_json(json& j, const Atom& atom);
void from_json(const json& j, Atom& atom);
void to_json(json& j, const SourceLine& line);
void from_json(const json& j, SourceLine& line);
void to_json(json& j, const ProgramLine& line);
void from_json(const json& j, ProgramLine& line);
void to_json(json& j, const TestCase& test);
void from_json(const json& j, TestCase& test);
void to_json(json& j, const Problem& problem);
void from_json(const json& j, Problem& problem);
void to_json(json& j, const Block& block);
void from_json(const json& j, Block& block);
void to_json(json& j, const ParsonsPuzzle& puzzle);
void from_json(const json& j, ParsonsPuzzle& puzzle);
void to_json(json& j, const Placement& placement);
void from_json(const json& j, Placement& placement);
/// An arrangement is a JSON array of {block_id, indent}.
void to_json(json& j, const Arrangement& arr);
void from_json(const json& j, Arrangement& arr);
void to_json(json& j, const Alignment& alignment);
void to_json(json& j, const Violation& violation);
void to_json(json& j, const GradeResult& result);
void from_json(const json& j, GradeResult& result);
void to_json(json& j, const TestOutcome& outcome);
void from_json(const json& j, TestOutcome& outcome);
void to_json(json& j, const CodeEvalResult& result);
void from_json(const json& j, CodeEvalResult& result);

/// Pretty-printed, key-sorted, newline-terminated; the form written to
/// stdout and to fixture files.
std::string dump_canonical(const json& j);

}  // namespace scaffold
