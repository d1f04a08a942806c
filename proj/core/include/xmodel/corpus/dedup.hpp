#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmodel/corpus/ingest.hpp"
#include "xmodel/corpus/simhash.hpp"

namespace xmodel::corpus {

struct DedupConfig {
  int hamming_threshold = 3;
  std::size_t shingle_len = 3;
  // Sources whose name contains this (case-insensitive) are deduplicated;
  // everything else passes through. Ignored when all_sources is set.
  std::string source_filter = "wiki";
  bool all_sources = false;

  void validate() const;
  bool applies_to(const std::string& source) const;
};

struct DropRecord {
  std::string source;
  std::string dropped_id;
  std::string matched_id;
  int distance = 0;
};
void to_json(nlohmann::json& j, const DropRecord& r);

// Streaming near-duplicate filter with one index per source. Documents are
// compared only against earlier kept documents of the same source.
class Deduplicator {
 public:
  explicit Deduplicator(DedupConfig config);

  // Returns the drop record, or nullopt if the document is kept.
  std::optional<DropRecord> offer(const Document& doc);

 private:
  struct SourceIndex {
    SimHashIndex index;
    std::vector<std::string> ids;
  };
  DedupConfig config_;
  std::map<std::string, SourceIndex> sources_;
};

struct DedupResult {
  std::vector<Document> kept;
  std::vector<DropRecord> dropped;
};

DedupResult dedup(const std::vector<Document>& docs, const DedupConfig& config = {});

}  // namespace xmodel::corpus
