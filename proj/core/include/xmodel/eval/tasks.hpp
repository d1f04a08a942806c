#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xmodel::eval {

struct EvalItem {
  std::string id;
  std::string question;
  std::array<std::string, 4> options;
  int correct_index = 0;
  std::string category;
};

// Throws ConfigError unless there are four distinct options and a valid
// correct_index.
void validate_item(const EvalItem& item);

// JSONL: question, options (4 strings), answer (0..3), optional category
// and id (defaults to the 1-based line number). Every bad line is collected
// and reported in one FormatError.
std::vector<EvalItem> parse_tasks(std::string_view jsonl);
std::vector<EvalItem> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, const std::vector<EvalItem>& items);
nlohmann::json item_to_json(const EvalItem& item);

}  // namespace xmodel::eval
