#include "xmodel/corpus/ingest.hpp"

#include <glob.h>
#include <zlib.h>

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "xmodel/error.hpp"
#include "xmodel/util/utf8.hpp"

namespace xmodel::corpus {
namespace {

constexpr std::size_t kMaxSamples = 8;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

}  // namespace

struct DocumentReader::File {
  gzFile handle = nullptr;
  std::filesystem::path path;
  std::size_t line = 0;

  ~File() {
    if (handle) gzclose(handle);
  }

  bool getline(std::string& out) {
    out.clear();
    char buf[1 << 14];
    for (;;) {
      if (!gzgets(handle, buf, sizeof buf)) {
        int err = 0;
        const char* msg = gzerror(handle, &err);
        if (err != Z_OK && err != Z_BUF_ERROR) throw Error(fmt::format("read error in {}: {}", path.string(), msg));
        return !out.empty();
      }
      out.append(buf);
      if (!out.empty() && out.back() == '\n') {
        out.pop_back();
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
      }
    }
  }
};

std::vector<std::filesystem::path> expand_glob(std::string_view pattern) {
  const std::string pat(pattern);
  if (pat.find_first_of("*?[") == std::string::npos) return {std::filesystem::path(pat)};
  glob_t g{};
  const int rc = ::glob(pat.c_str(), 0, nullptr, &g);
  std::vector<std::filesystem::path> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw Error(fmt::format("glob failed for {}", pat));
  if (out.empty()) throw Error(fmt::format("no files match {}", pat));
  std::sort(out.begin(), out.end());
  return out;
}

std::string source_from_path(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (std::string_view ext : {".gz", ".jsonl", ".json"}) {
    if (name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0) {
      name.resize(name.size() - ext.size());
    }
  }
  return name;
}

DocumentReader::DocumentReader(std::vector<std::filesystem::path> paths) : paths_(std::move(paths)) {}
DocumentReader::~DocumentReader() = default;
DocumentReader::DocumentReader(DocumentReader&&) noexcept = default;
DocumentReader& DocumentReader::operator=(DocumentReader&&) noexcept = default;

bool DocumentReader::open_next_file() {
  if (next_path_ >= paths_.size()) return false;
  auto f = std::make_unique<File>();
  f->path = paths_[next_path_++];
  f->handle = gzopen(f->path.c_str(), "rb");
  if (!f->handle) throw Error(fmt::format("cannot open {}", f->path.string()));
  file_ = std::move(f);
  file_lines_ = 0;
  file_malformed_ = 0;
  return true;
}

void DocumentReader::finish_file() {
  if (file_lines_ > 0 && file_malformed_ * 10 > file_lines_) {
    throw FormatError(fmt::format("{}: {} of {} lines malformed (limit 10%)", file_->path.string(), file_malformed_,
                                  file_lines_));
  }
  file_.reset();
}

void DocumentReader::note(std::string reason) {
  ++stats_.malformed;
  ++file_malformed_;
  if (stats_.samples.size() < kMaxSamples) {
    stats_.samples.push_back(fmt::format("{}:{}: {}", file_->path.string(), file_->line, reason));
  }
}

std::optional<Document> DocumentReader::next() {
  std::string line;
  for (;;) {
    if (!file_ && !open_next_file()) return std::nullopt;
    if (!file_->getline(line)) {
      finish_file();
      continue;
    }
    ++file_->line;
    if (blank(line)) {
      ++stats_.blank_lines;
      continue;
    }
    ++stats_.lines;
    ++file_lines_;

    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      note("not a JSON object");
      continue;
    }
    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) {
      note("missing string field \"text\"");
      continue;
    }
    Document doc;
    doc.text = text->get<std::string>();
    if (blank(doc.text)) {
      note("empty text");
      continue;
    }
    if (!utf8::is_valid(doc.text)) {
      note("text is not valid UTF-8");
      continue;
    }
    auto id = j.find("id");
    if (id != j.end() && id->is_string()) {
      doc.id = id->get<std::string>();
    } else if (id != j.end() && id->is_number_integer()) {
      doc.id = std::to_string(id->get<long long>());
    } else {
      doc.id = fmt::format("{}:{}", file_->path.filename().string(), file_->line);
    }
    auto source = j.find("source");
    doc.source = source != j.end() && source->is_string() ? source->get<std::string>() : source_from_path(file_->path);
    if (!seen_ids_.emplace(doc.source, doc.id).second) {
      note(fmt::format("duplicate id \"{}\" in source \"{}\"", doc.id, doc.source));
      continue;
    }
    ++stats_.documents;
    return doc;
  }
}

std::vector<Document> read_documents(const std::vector<std::filesystem::path>& paths, IngestStats* stats) {
  DocumentReader reader(paths);
  std::vector<Document> out;
  while (auto d = reader.next()) out.push_back(std::move(*d));
  if (stats) *stats = reader.stats();
  return out;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
  const bool gz = path.extension() == ".gz";
  gzFile f = gzopen(path.c_str(), gz ? "wb" : "wbT");
  if (!f) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& d : docs) {
    const std::string line = nlohmann::json{{"id", d.id}, {"source", d.source}, {"text", d.text}}.dump() + "\n";
    if (gzwrite(f, line.data(), static_cast<unsigned>(line.size())) != static_cast<int>(line.size())) {
      gzclose(f);
      throw Error(fmt::format("write failed: {}", path.string()));
    }
  }
  if (gzclose(f) != Z_OK) throw Error(fmt::format("write failed: {}", path.string()));
}

}  // namespace xmodel::corpus
