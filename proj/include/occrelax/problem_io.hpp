#pragma once

#include <string>

#include "json.hpp"
#include "occrelax/core.hpp"

namespace occrelax::io {

/// Problem from the JSON schema, or from {"builtin": name}. Throws
/// ProblemError on schema errors; malformed text reports the byte offset.
[[nodiscard]] core::VariationalProblem problemFromJson(const nlohmann::json& j);
[[nodiscard]] core::VariationalProblem parseProblem(const std::string& text);
[[nodiscard]] core::VariationalProblem loadProblem(const std::string& path);

/// Full schema when every field carries expression text; a builtin whose
/// fields are native code serialises as {"builtin": name}. Throws
/// ProblemError for anything else.
[[nodiscard]] nlohmann::json problemToJson(const core::VariationalProblem& p);

/// Two-space indented JSON with every double at 17 significant digits.
[[nodiscard]] std::string dumpJson(const nlohmann::json& j);

}  // namespace occrelax::io
