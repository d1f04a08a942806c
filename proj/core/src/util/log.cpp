#include "xmodel/util/log.hpp"

#include <atomic>
#include <iostream>

namespace xmodel::log {
namespace {

std::atomic<Level> g_level{Level::kInfo};

const char* name(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
  }
  return "info";
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level lvl, std::string_view msg, const nlohmann::json& fields) {
  if (lvl < g_level.load()) return;
  nlohmann::json line = {{"level", name(lvl)}, {"msg", msg}};
  if (fields.is_object()) {
    for (const auto& [k, v] : fields.items()) line[k] = v;
  }
  std::cerr << line.dump() << '\n';
}

}  // namespace xmodel::log
