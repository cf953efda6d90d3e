#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "evjrs/common.hpp"

namespace evjrs {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& context) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw Error(ErrorCategory::validation, "unknown key '" + key + "' in " + context);
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCategory::io, what + " parse error: " + e.what());
  }
}

inline void check_schema_version(const nlohmann::json& j, int expected, const std::string& what) {
  int v = j.value("version", -1);
  if (v != expected)
    throw Error(ErrorCategory::io, what + ": unsupported schema version " + std::to_string(v) +
                                       " (this build reads version " + std::to_string(expected) +
                                       ")");
}

}  // namespace evjrs
