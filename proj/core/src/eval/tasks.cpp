#include "xmodel/eval/tasks.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "xmodel/error.hpp"

namespace xmodel::eval {

void validate_item(const EvalItem& item) {
  if (item.correct_index < 0 || item.correct_index > 3) {
    throw ConfigError(fmt::format("item {}: correct_index {} outside 0..3", item.id, item.correct_index));
  }
  std::set<std::string> distinct(item.options.begin(), item.options.end());
  if (distinct.size() != 4) throw ConfigError(fmt::format("item {}: options are not distinct", item.id));
}

std::vector<EvalItem> parse_tasks(std::string_view jsonl) {
  std::vector<EvalItem> items;
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const auto j = nlohmann::json::parse(line, nullptr, false);
    const auto bad = [&](std::string_view why) { problems.push_back(fmt::format("line {}: {}", lineno, why)); };
    if (j.is_discarded() || !j.is_object()) {
      bad("not a JSON object");
      continue;
    }
    EvalItem item;
    if (!j.contains("question") || !j["question"].is_string()) {
      bad("missing string \"question\"");
      continue;
    }
    item.question = j["question"].get<std::string>();
    const auto opts = j.find("options");
    if (opts == j.end() || !opts->is_array() || opts->size() != 4) {
      bad("\"options\" must be an array of 4 strings");
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(*opts)[i].is_string()) ok = false;
      else item.options[i] = (*opts)[i].get<std::string>();
    }
    if (!ok) {
      bad("\"options\" must be an array of 4 strings");
      continue;
    }
    if (!j.contains("answer") || !j["answer"].is_number_integer()) {
      bad("missing integer \"answer\"");
      continue;
    }
    item.correct_index = j["answer"].get<int>();
    if (j.contains("category") && j["category"].is_string()) item.category = j["category"].get<std::string>();
    if (j.contains("id") && j["id"].is_string()) {
      item.id = j["id"].get<std::string>();
    } else if (j.contains("id") && j["id"].is_number_integer()) {
      item.id = std::to_string(j["id"].get<long long>());
    } else {
      item.id = std::to_string(lineno);
    }
    try {
      validate_item(item);
    } catch (const ConfigError& e) {
      bad(e.what());
      continue;
    }
    if (!ids.insert(item.id).second) {
      bad(fmt::format("duplicate id \"{}\"", item.id));
      continue;
    }
    items.push_back(std::move(item));
  }
  if (!problems.empty()) {
    std::string msg = fmt::format("task file has {} malformed line(s):", problems.size());
    for (const auto& p : problems) msg += "\n  " + p;
    throw FormatError(msg);
  }
  return items;
}

std::vector<EvalItem> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_tasks(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

nlohmann::json item_to_json(const EvalItem& item) {
  return {{"id", item.id},
          {"question", item.question},
          {"options", item.options},
          {"answer", item.correct_index},
          {"category", item.category}};
}

void save_tasks(const std::filesystem::path& path, const std::vector<EvalItem>& items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& item : items) out << item_to_json(item).dump() << '\n';
}

}  // namespace xmodel::eval
