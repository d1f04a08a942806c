#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xmodel::corpus {

struct Document {
  std::string id;
  std::string source;  // mixture source key
  std::string text;
};

struct IngestStats {
  std::size_t lines = 0;
  std::size_t documents = 0;
  std::size_t malformed = 0;  // bad JSON, missing/empty "text", duplicate id
  std::size_t blank_lines = 0;
  // First few problems, as "file:line: reason".
  std::vector<std::string> samples;
};

// Expands a shell glob (sorted). A pattern without wildcards is returned
// as-is so that a missing file surfaces as a read error later.
std::vector<std::filesystem::path> expand_glob(std::string_view pattern);

// Streaming JSONL reader over several files, plain or gzip (detected by
// content). Each line needs a string "text"; optional "id" and "source".
// Missing ids default to "<file>:<line>", missing sources to the file stem.
// After each file, more than 10% malformed lines is an error.
class DocumentReader {
 public:
  explicit DocumentReader(std::vector<std::filesystem::path> paths);
  ~DocumentReader();
  DocumentReader(DocumentReader&&) noexcept;
  DocumentReader& operator=(DocumentReader&&) noexcept;

  std::optional<Document> next();
  const IngestStats& stats() const { return stats_; }

 private:
  struct File;
  bool open_next_file();
  void finish_file();
  void note(std::string reason);

  std::vector<std::filesystem::path> paths_;
  std::size_t next_path_ = 0;
  std::unique_ptr<File> file_;
  IngestStats stats_;
  std::size_t file_lines_ = 0;
  std::size_t file_malformed_ = 0;
  std::set<std::pair<std::string, std::string>> seen_ids_;
};

// Reads everything into memory.
std::vector<Document> read_documents(const std::vector<std::filesystem::path>& paths, IngestStats* stats = nullptr);

// One JSON object per line; gzip when the path ends in ".gz".
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);

// "wiki_th.jsonl.gz" -> "wiki_th".
std::string source_from_path(const std::filesystem::path& path);

}  // namespace xmodel::corpus
