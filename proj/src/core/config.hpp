#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "core/error.hpp"

namespace b3d {

using Json = nlohmann::json;

// Strict view over a JSON object: every key must be consumed, unknown keys
// are configuration errors. Nested objects get their own reader.
class ConfigReader {
 public:
  ConfigReader(const Json& j, std::string context);

  bool has(const std::string& key) const;

  template <typename T>
  T get(const std::string& key) {
    mark(key);
    require(json_.contains(key), ErrorCode::config,
            context_ + ": missing required key '" + key + "'");
    return convert<T>(json_.at(key), key);
  }

  template <typename T>
  T get_or(const std::string& key, const T& fallback) {
    if (!json_.contains(key)) {
      mark(key);
      return fallback;
    }
    return get<T>(key);
  }

  // Raw subtree access (consumes the key).
  const Json& raw(const std::string& key);
  const Json* raw_optional(const std::string& key);

  ConfigReader object(const std::string& key);

  // Errors if any key was never consumed.
  void finish() const;

  const std::string& context() const { return context_; }

 private:
  template <typename T>
  T convert(const Json& value, const std::string& key) {
    try {
      return value.get<T>();
    } catch (const Json::exception&) {
      fail(ErrorCode::config, context_ + ": key '" + key + "' has the wrong type");
    }
  }

  void mark(const std::string& key) { seen_.insert(key); }

  const Json& json_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace b3d
