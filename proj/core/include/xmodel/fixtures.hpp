#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmodel/corpus/ingest.hpp"
#include "xmodel/eval/tasks.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/tokenizer/config.hpp"
#include "xmodel/trainer/trainer.hpp"
#include "xmodel/util/rng.hpp"

// Deterministic synthetic data shared by make-fixtures and the tests.
namespace xmodel::fixtures {

enum class Lang { kThai, kArabic, kFrench, kChinese, kEnglish };
inline constexpr Lang kAllLangs[] = {Lang::kThai, Lang::kArabic, Lang::kFrench, Lang::kChinese, Lang::kEnglish};
std::string lang_code(Lang lang);

std::string sentence(Lang lang, Rng& rng);
std::string paragraph(Lang lang, Rng& rng, std::size_t sentences);

// Documents spread over wiki_<lang> and culturax_<lang> sources, plus a
// "code" source with indented lines. About one wiki document in six is an
// exact or lightly edited copy of an earlier one.
std::vector<corpus::Document> multilingual_corpus(std::size_t n_docs, std::uint64_t seed);

// Fresh paragraphs (different stream from the corpus).
std::vector<std::string> heldout_texts(std::size_t n, std::uint64_t seed);

// About 2 KB of mixed text for overfitting runs.
std::string tiny_corpus_text();

// Arithmetic, vocabulary, ordering and comparison questions with four
// distinct options.
std::vector<eval::EvalItem> synthetic_tasks(std::size_t n, std::uint64_t seed);

// Random mix of scripts, emoji, 1-8 space runs, digit runs and control
// whitespace, for round-trip properties.
std::string property_string(Rng& rng);

tokenizer::TokenizerConfig desk_tokenizer_config();
trainer::TrainConfig desk_train_config();

// corpus/*.jsonl (one gzip), heldout.jsonl, tiny.jsonl, tasks.jsonl,
// configs/{tokenizer,model,train,mixture}.json.
void write_fixture_set(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace xmodel::fixtures
