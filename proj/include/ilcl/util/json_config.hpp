#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ilcl::util {

/// Copies j[key] into out when present; type errors become invalid_argument.
template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
  }
}

/// Throws invalid_argument naming the first key of j absent from `known`.
inline void reject_unknown_keys(const nlohmann::json& j, const nlohmann::json& known, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + " config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw std::invalid_argument("unknown " + what + " config key '" + k + "'");
}

}  // namespace ilcl::util
