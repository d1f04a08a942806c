#include "xmodel/trainer/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/hash.hpp"

namespace xmodel::trainer {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

std::uint64_t get_u64(std::string_view s, std::size_t at) {
  std::uint64_t v;
  std::memcpy(&v, s.data() + at, 8);
  return v;
}

}  // namespace

const std::vector<double>& CheckpointFile::tensor(const std::string& name) const {
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].first == name) return data[i];
  }
  throw FormatError(fmt::format("checkpoint has no tensor \"{}\"", name));
}

const tensor::Shape& CheckpointFile::shape(const std::string& name) const {
  for (const auto& [n, s] : shapes) {
    if (n == name) return s;
  }
  throw FormatError(fmt::format("checkpoint has no tensor \"{}\"", name));
}

bool CheckpointFile::contains(const std::string& name) const {
  for (const auto& [n, s] : shapes) {
    if (n == name) return true;
  }
  return false;
}

void CheckpointFile::add(std::string name, tensor::Shape shape, std::vector<double> values) {
  if (tensor::numel_of(shape) != values.size()) throw Error(fmt::format("checkpoint: \"{}\" shape/size mismatch", name));
  if (name == "__metadata__" || contains(name)) throw Error(fmt::format("checkpoint: duplicate tensor \"{}\"", name));
  shapes.emplace_back(std::move(name), std::move(shape));
  data.push_back(std::move(values));
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.shapes.size(); ++i) {
    const std::uint64_t len = ckpt.data[i].size() * sizeof(double);
    header[ckpt.shapes[i].first] = {{"dtype", "f64"}, {"shape", ckpt.shapes[i].second}, {"offset", offset}, {"length", len}};
    offset += len;
  }
  header["__metadata__"] = ckpt.metadata;
  const std::string head = header.dump();

  std::string buf;
  buf.reserve(24 + head.size() + offset);
  buf.append(kCheckpointMagic, 8);
  put_u64(buf, head.size());
  buf += head;
  for (const auto& d : ckpt.data) buf.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  put_u64(buf, fnv1a64(buf));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(fmt::format("write failed: {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  const auto bad = [&](const std::string& why) { return FormatError(fmt::format("{}: {}", path.string(), why)); };

  if (buf.size() < 24 || std::memcmp(buf.data(), kCheckpointMagic, 8) != 0) throw bad("not a checkpoint (bad magic or truncated)");
  const std::uint64_t stored = get_u64(buf, buf.size() - 8);
  if (fnv1a64(std::string_view(buf).substr(0, buf.size() - 8)) != stored) throw bad("checksum mismatch");
  const std::uint64_t head_len = get_u64(buf, 8);
  if (head_len > buf.size() - 24) throw bad("header length past end of file");
  nlohmann::json header = nlohmann::json::parse(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(head_len),
                                                nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw bad("header is not a JSON object");
  const std::size_t data_begin = 16 + head_len;
  const std::size_t data_len = buf.size() - 8 - data_begin;

  CheckpointFile ckpt;
  try {
    // Tensors are laid out in offset order.
    std::vector<std::pair<std::uint64_t, std::string>> order;
    for (auto it = header.begin(); it != header.end(); ++it) {
      if (it.key() == "__metadata__") continue;
      order.emplace_back(it.value().at("offset").get<std::uint64_t>(), it.key());
    }
    std::sort(order.begin(), order.end());
    for (const auto& [offset, name] : order) {
      const auto& e = header.at(name);
      if (e.at("dtype").get<std::string>() != "f64") throw bad(fmt::format("tensor \"{}\" has unsupported dtype", name));
      const auto shape = e.at("shape").get<tensor::Shape>();
      const auto len = e.at("length").get<std::uint64_t>();
      if (len != tensor::numel_of(shape) * sizeof(double) || offset > data_len || len > data_len - offset) {
        throw bad(fmt::format("tensor \"{}\" has an inconsistent extent", name));
      }
      std::vector<double> values(tensor::numel_of(shape));
      std::memcpy(values.data(), buf.data() + data_begin + offset, len);
      ckpt.add(name, shape, std::move(values));
    }
    if (header.contains("__metadata__")) ckpt.metadata = header.at("__metadata__");
  } catch (const nlohmann::json::exception& e) {
    throw bad(fmt::format("malformed header: {}", e.what()));
  }
  return ckpt;
}

}  // namespace xmodel::trainer
