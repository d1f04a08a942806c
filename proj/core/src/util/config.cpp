#include "xmodel/util/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/hash.hpp"

namespace xmodel::config {

StrictObject::StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) {
    throw ConfigError(fmt::format("{}: expected an object, got {}", path_, j_.type_name()));
  }
}

bool StrictObject::contains(std::string_view key) const { return j_.contains(std::string(key)); }

const nlohmann::json& StrictObject::raw(std::string_view key) const { return j_.at(std::string(key)); }

std::string StrictObject::path_of(std::string_view key) const { return fmt::format("{}.{}", path_, key); }

void StrictObject::mark(std::string_view key) { seen_.emplace_back(key); }

void StrictObject::type_error(std::string_view key, std::string_view expected) const {
  throw ConfigError(fmt::format("{}: expected {}, got {}", path_of(key), expected,
                                j_.at(std::string(key)).type_name()));
}

void StrictObject::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw ConfigError(fmt::format("{}: unknown key", path_of(key)));
    }
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

std::uint64_t digest(const nlohmann::json& j) { return fnv1a64(j.dump()); }

}  // namespace xmodel::config
