#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmodel/tensor/tensor.hpp"

namespace xmodel::trainer {

// Layout: "XMCKPT01", u64 LE header length, JSON header, raw f64 LE tensor
// data, u64 LE FNV-1a checksum of everything before it. The header maps
// each tensor name to {dtype, shape, offset, length} (offset relative to
// the data section) and holds free-form "__metadata__".
struct CheckpointFile {
  std::vector<std::pair<std::string, tensor::Shape>> shapes;
  std::vector<std::vector<double>> data;
  nlohmann::json metadata = nlohmann::json::object();

  const std::vector<double>& tensor(const std::string& name) const;
  const tensor::Shape& shape(const std::string& name) const;
  bool contains(const std::string& name) const;
  void add(std::string name, tensor::Shape shape, std::vector<double> values);
};

inline constexpr char kCheckpointMagic[] = "XMCKPT01";

// Written to a temporary file and renamed, so a crash never leaves a
// half-written checkpoint under the final name.
void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt);
// Throws FormatError on a bad magic, truncation or checksum mismatch.
CheckpointFile read_checkpoint(const std::filesystem::path& path);

}  // namespace xmodel::trainer
