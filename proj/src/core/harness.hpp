#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace b3d {

using Json = nlohmann::json;

std::vector<std::string> command_names();

// Full default configuration for a command; required path-valued keys are
// present with empty values.
Json default_command_config(const std::string& command);

// Executes one command against a parsed config. Unknown config keys are
// rejected. Throws b3d::Error on failure.
void run_command(const std::string& command, const Json& config);

// Shallow top-level merge used for CLI overrides (e.g. --seed, --threads).
Json merge_config(Json base, const Json& overrides);

}  // namespace b3d
