#include "core/config.hpp"

namespace b3d {

ConfigReader::ConfigReader(const Json& j, std::string context)
    : json_(j), context_(std::move(context)) {
  require(j.is_object(), ErrorCode::config, context_ + ": expected a JSON object");
}

bool ConfigReader::has(const std::string& key) const { return json_.contains(key); }

const Json& ConfigReader::raw(const std::string& key) {
  mark(key);
  require(json_.contains(key), ErrorCode::config,
          context_ + ": missing required key '" + key + "'");
  return json_.at(key);
}

const Json* ConfigReader::raw_optional(const std::string& key) {
  mark(key);
  if (!json_.contains(key)) return nullptr;
  return &json_.at(key);
}

ConfigReader ConfigReader::object(const std::string& key) {
  return ConfigReader(raw(key), context_ + "." + key);
}

void ConfigReader::finish() const {
  for (auto it = json_.begin(); it != json_.end(); ++it) {
    require(seen_.count(it.key()) > 0, ErrorCode::config,
            context_ + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace b3d
