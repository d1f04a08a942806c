#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace xmodel::log {

enum class Level { kDebug, kInfo, kWarn, kError };

void set_level(Level level);
Level level();

// Writes one JSON object per line to stderr:
//   {"level":"info","msg":"...","step":12,...}
void write(Level level, std::string_view msg, const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::kInfo, msg, fields);
}
inline void warn(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::kWarn, msg, fields);
}
inline void error(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::kError, msg, fields);
}
inline void debug(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
  write(Level::kDebug, msg, fields);
}

}  // namespace xmodel::log
