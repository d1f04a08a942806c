#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

namespace xmodel::config {

// Helpers for strict JSON configs: unknown keys are rejected, type mismatches
// report a JSON path like "$.train.seq_len".
//
//   StrictObject obj(j, "$");
//   obj.get("hidden", cfg.hidden);
//   obj.finish();  // throws if j had keys nobody asked for
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path);

  template <typename T>
  void get(std::string_view key, T& out);

  bool contains(std::string_view key) const;
  const nlohmann::json& raw(std::string_view key) const;
  std::string path_of(std::string_view key) const;
  void finish() const;

 private:
  void mark(std::string_view key);
  [[noreturn]] void type_error(std::string_view key, std::string_view expected) const;

  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Stable 64-bit digest of a JSON value (FNV-1a over its compact dump; keys
// are sorted by nlohmann::json so the digest is order-independent).
std::uint64_t digest(const nlohmann::json& j);

template <typename T>
void StrictObject::get(std::string_view key, T& out) {
  mark(key);
  auto it = j_.find(std::string(key));
  if (it == j_.end()) return;  // keep the default
  const auto& v = *it;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) type_error(key, "boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) type_error(key, "integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned() || v.get<long long>() >= 0) {
        out = v.get<T>();
      } else {
        type_error(key, "non-negative integer");
      }
    } else {
      out = v.get<T>();
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) type_error(key, "number");
    out = v.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) type_error(key, "string");
    out = v.get<std::string>();
  } else {
    out = v.get<T>();
  }
}

}  // namespace xmodel::config
