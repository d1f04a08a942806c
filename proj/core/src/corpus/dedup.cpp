#include "xmodel/corpus/dedup.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "xmodel/error.hpp"

namespace xmodel::corpus {

void DedupConfig::validate() const {
  if (hamming_threshold < 0 || hamming_threshold > 64) {
    throw ConfigError(fmt::format("dedup: hamming_threshold {} outside [0, 64]", hamming_threshold));
  }
  if (shingle_len == 0) throw ConfigError("dedup: shingle_len must be positive");
}

bool DedupConfig::applies_to(const std::string& source) const {
  if (all_sources) return true;
  if (source_filter.empty()) return true;
  const auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  return lower(source).find(lower(source_filter)) != std::string::npos;
}

void to_json(nlohmann::json& j, const DropRecord& r) {
  j = {{"source", r.source}, {"dropped_id", r.dropped_id}, {"matched_id", r.matched_id}, {"distance", r.distance}};
}

Deduplicator::Deduplicator(DedupConfig config) : config_(std::move(config)) { config_.validate(); }

std::optional<DropRecord> Deduplicator::offer(const Document& doc) {
  if (!config_.applies_to(doc.source)) return std::nullopt;
  auto it = sources_.find(doc.source);
  if (it == sources_.end()) {
    it = sources_.emplace(doc.source, SourceIndex{SimHashIndex(config_.hamming_threshold), {}}).first;
  }
  SourceIndex& s = it->second;
  const std::uint64_t fp = simhash(doc.text, config_.shingle_len);
  if (auto m = s.index.query(fp)) {
    return DropRecord{doc.source, doc.id, s.ids[m->index], m->distance};
  }
  s.index.insert(fp);
  s.ids.push_back(doc.id);
  return std::nullopt;
}

DedupResult dedup(const std::vector<Document>& docs, const DedupConfig& config) {
  Deduplicator d(config);
  DedupResult r;
  for (const auto& doc : docs) {
    if (auto drop = d.offer(doc)) {
      r.dropped.push_back(std::move(*drop));
    } else {
      r.kept.push_back(doc);
    }
  }
  return r;
}

}  // namespace xmodel::corpus
