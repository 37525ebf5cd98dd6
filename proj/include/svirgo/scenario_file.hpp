#pragma once

// JSON scenario documents. Every key is optional except where noted in the
// README; unknown keys are rejected with the dotted path of the offender.

#include "svirgo/kernel.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace svirgo {

Scenario scenario_from_json(const nlohmann::json& doc);
// Full document with every default spelled out.
nlohmann::json scenario_to_json(const Scenario& s);

// Throws IoError when the file cannot be read, ScenarioInvalid when it does
// not parse.
nlohmann::json read_scenario_document(const std::string& path);

// `path=value` with a dotted path; numeric components index arrays. The
// value is parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

std::string scope_to_string(Scope s);
Scope scope_from_string(const std::string& s);

}  // namespace svirgo
