#include "xmodel/fixtures.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "xmodel/corpus/mixture.hpp"
#include "xmodel/error.hpp"
#include "xmodel/util/config.hpp"
#include "xmodel/util/utf8.hpp"

namespace xmodel::fixtures {
namespace {

const std::vector<std::string>& words(Lang lang) {
  static const std::vector<std::string> th = {
      "สวัสดี", "ภาษา", "ประเทศ", "ไทย", "คน", "บ้าน", "น้ำ", "อาหาร", "เรียน", "หนังสือ",
      "โรงเรียน", "ครู", "นักเรียน", "วัน", "เวลา", "ทำงาน", "ตลาด", "รถ", "ถนน", "เมือง",
      "ความ", "รัก", "ดี", "มาก", "สวย", "ใหญ่", "เล็ก", "กิน", "ข้าว", "ไป",
      "มา", "ที่", "และ", "ของ", "ใน", "เป็น", "มี", "ได้", "จะ", "ว่า", "ครับ", "ค่ะ"};
  static const std::vector<std::string> ar = {
      "مرحبا", "اللغة", "العربية", "كتاب", "مدرسة", "بيت", "ماء", "طعام", "سوق", "مدينة",
      "شارع", "سيارة", "يوم", "وقت", "عمل", "معلم", "طالب", "جميل", "كبير", "صغير",
      "في", "من", "إلى", "على", "هذا", "هذه", "التي", "الذي", "كان", "يكون",
      "قال", "بعد", "قبل", "مع", "عن", "كل", "بين", "حتى", "أن", "لا"};
  static const std::vector<std::string> fr = {
      "le", "la", "les", "de", "des", "et", "un", "une", "est", "dans",
      "pour", "sur", "avec", "pas", "que", "qui", "maison", "école", "livre", "ville",
      "rue", "voiture", "jour", "temps", "travail", "été", "élève", "professeur", "marché", "très",
      "beau", "grand", "petit", "français", "langue", "manger", "aller", "venir", "être", "avoir",
      "où", "déjà", "ça", "garçon", "cœur", "noël"};
  static const std::vector<std::string> zh = {
      "我们", "你们", "他们", "中国", "语言", "学校", "老师", "学生", "今天", "明天",
      "时间", "工作", "城市", "市场", "汽车", "书", "水", "饭", "吃", "喝",
      "去", "来", "是", "的", "了", "在", "有", "和", "很", "好",
      "大", "小", "美丽", "朋友", "家", "学习", "天气", "电脑", "手机", "世界"};
  static const std::vector<std::string> en = {
      "the", "of", "and", "to", "in", "is", "that", "it", "was", "for",
      "on", "are", "with", "as", "they", "be", "at", "one", "have", "this",
      "from", "by", "hot", "word", "but", "what", "some", "we", "can", "out",
      "other", "were", "all", "there", "when", "up", "use", "your", "how", "said",
      "house", "school", "book", "city", "water", "food", "market", "model", "data", "language"};
  switch (lang) {
    case Lang::kThai: return th;
    case Lang::kArabic: return ar;
    case Lang::kFrench: return fr;
    case Lang::kChinese: return zh;
    case Lang::kEnglish: return en;
  }
  return en;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) { return v[rng.uniform(v.size())]; }

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string code_block(Rng& rng) {
  static const std::vector<std::string> names = {"x", "y", "total", "count", "items", "value", "result", "data"};
  std::string out = fmt::format("def f_{}({}):\n", rng.uniform(100), pick(names, rng));
  const std::size_t lines = 2 + rng.uniform(4);
  for (std::size_t i = 0; i < lines; ++i) {
    const std::size_t indent = 4 * (1 + rng.uniform(2));
    out += std::string(indent, ' ');
    out += fmt::format("{} = {} + {}\n", pick(names, rng), pick(names, rng), rng.uniform(1000));
  }
  out += "    return " + pick(names, rng) + "\n";
  return out;
}

}  // namespace

std::string lang_code(Lang lang) {
  switch (lang) {
    case Lang::kThai: return "th";
    case Lang::kArabic: return "ar";
    case Lang::kFrench: return "fr";
    case Lang::kChinese: return "zh";
    case Lang::kEnglish: return "en";
  }
  return "en";
}

std::string sentence(Lang lang, Rng& rng) {
  const auto& w = words(lang);
  const std::size_t n = 6 + rng.uniform(9);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string word = pick(w, rng);
    if (rng.uniform(12) == 0) word = std::to_string(rng.uniform(3000));
    switch (lang) {
      case Lang::kThai:
        // Thai runs words together; spaces mark phrase breaks.
        if (i > 0 && rng.uniform(4) == 0) out += ' ';
        out += word;
        break;
      case Lang::kChinese:
        if (i > 0 && rng.uniform(6) == 0) out += "，";
        out += word;
        break;
      default:
        if (i > 0) out += ' ';
        out += i == 0 ? capitalize(word) : word;
    }
  }
  switch (lang) {
    case Lang::kChinese: out += "。"; break;
    case Lang::kArabic: out += rng.uniform(5) == 0 ? "؟" : "."; break;
    case Lang::kThai: break;
    default: out += rng.uniform(6) == 0 ? "?" : ".";
  }
  return out;
}

std::string paragraph(Lang lang, Rng& rng, std::size_t sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (i > 0) out += lang == Lang::kChinese ? "" : " ";
    out += sentence(lang, rng);
  }
  return out;
}

std::vector<corpus::Document> multilingual_corpus(std::size_t n_docs, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "corpus");
  std::vector<corpus::Document> docs;
  std::vector<std::size_t> wiki;
  for (std::size_t i = 0; i < n_docs; ++i) {
    corpus::Document d;
    d.id = fmt::format("doc{:05d}", i);
    if (!wiki.empty() && rng.uniform(6) == 0) {
      const corpus::Document& orig = docs[wiki[rng.uniform(wiki.size())]];
      d.source = orig.source;
      d.text = orig.text;
      // Half exact copies, half with a short tail appended.
      if (rng.uniform(2) == 0) d.text += " " + std::to_string(rng.uniform(100));
      docs.push_back(std::move(d));
      continue;
    }
    if (rng.uniform(10) == 0) {
      d.source = "code";
      d.text = code_block(rng);
    } else {
      const Lang lang = kAllLangs[rng.uniform(5)];
      d.source = (rng.uniform(2) == 0 ? "wiki_" : "culturax_") + lang_code(lang);
      const std::size_t paras = 1 + rng.uniform(3);
      for (std::size_t p = 0; p < paras; ++p) {
        if (p > 0) d.text += "\n\n";
        d.text += paragraph(lang, rng, 2 + rng.uniform(3));
      }
      if (d.source.starts_with("wiki_")) wiki.push_back(docs.size());
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<std::string> heldout_texts(std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "heldout");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(paragraph(kAllLangs[i % 5], rng, 3));
  return out;
}

std::string tiny_corpus_text() {
  Rng rng = Rng::derive(7, "tiny");
  std::string out;
  std::size_t i = 0;
  while (utf8::count_chars(out) < 1400 || out.size() < 2000) {
    if (!out.empty()) out += "\n";
    out += sentence(kAllLangs[i++ % 5], rng);
  }
  return out;
}

std::vector<eval::EvalItem> synthetic_tasks(std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "tasks");
  static const std::vector<std::pair<std::string, std::string>> vocab = {
      {"น้ำ", "water"}, {"บ้าน", "house"},   {"อาหาร", "food"},  {"หนังสือ", "book"}, {"เมือง", "city"},
      {"ตลาด", "market"}, {"โรงเรียน", "school"}, {"ครู", "teacher"}, {"รถ", "car"},       {"ถนน", "road"},
      {"วัน", "day"},     {"เวลา", "time"},     {"คน", "person"}, {"ภาษา", "language"}, {"ข้าว", "rice"}};
  std::vector<eval::EvalItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    eval::EvalItem item;
    item.id = fmt::format("task{:04d}", i);
    std::array<std::string, 4> opts;
    switch (i % 4) {
      case 0: {
        const auto a = rng.uniform(50), b = rng.uniform(50);
        item.category = "arithmetic";
        item.question = fmt::format("{} + {} = ?", a, b);
        const auto ans = a + b;
        opts = {std::to_string(ans), std::to_string(ans + 1), std::to_string(ans + 10), std::to_string(ans + 2)};
        break;
      }
      case 1: {
        item.category = "vocabulary";
        const std::size_t k = rng.uniform(vocab.size());
        item.question = fmt::format("คำว่า \"{}\" แปลว่าอะไร", vocab[k].first);
        opts[0] = vocab[k].second;
        std::set<std::size_t> used{k};
        for (std::size_t j = 1; j < 4; ++j) {
          std::size_t o;
          do o = rng.uniform(vocab.size());
          while (!used.insert(o).second);
          opts[j] = vocab[o].second;
        }
        break;
      }
      case 2: {
        item.category = "sequence";
        const auto start = rng.uniform(20), step = 1 + rng.uniform(5);
        item.question = fmt::format("{}, {}, {}, ?", start, start + step, start + 2 * step);
        const auto ans = start + 3 * step;
        opts = {std::to_string(ans), std::to_string(ans + step), std::to_string(ans - 1), std::to_string(ans + 2 * step)};
        break;
      }
      default: {
        item.category = "comparison";
        const auto a = rng.uniform(500), b = a + 1 + rng.uniform(500);
        item.question = fmt::format("Which is larger: {} or {}?", a, b);
        opts = {std::to_string(b), std::to_string(a), std::to_string(a == 0 ? b + 1 : a - 1), "equal"};
        break;
      }
    }
    // Correct option first, then move it to a random index.
    const int pos = static_cast<int>(rng.uniform(4));
    std::swap(opts[0], opts[static_cast<std::size_t>(pos)]);
    item.options = opts;
    item.correct_index = pos;
    eval::validate_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

std::string property_string(Rng& rng) {
  static const std::vector<std::string> extras = {"😀", "👍🏽", "🇹🇭", "👨‍👩‍👧", "✓", "—", "…", "€", "ß", "Ω", "한국어", "ñ", "\t", "\n", "\r\n"};
  std::string out;
  const std::size_t parts = 1 + rng.uniform(8);
  for (std::size_t i = 0; i < parts; ++i) {
    switch (rng.uniform(6)) {
      case 0: out += std::string(1 + rng.uniform(8), ' '); break;
      case 1: {
        const std::size_t n = 1 + rng.uniform(12);
        for (std::size_t k = 0; k < n; ++k) out += static_cast<char>('0' + rng.uniform(10));
        break;
      }
      case 2: out += extras[rng.uniform(extras.size())]; break;
      default: {
        const Lang lang = kAllLangs[rng.uniform(5)];
        out += pick(words(lang), rng);
        if (rng.uniform(3) == 0) out += sentence(lang, rng);
      }
    }
  }
  return out;
}

tokenizer::TokenizerConfig desk_tokenizer_config() {
  tokenizer::TokenizerConfig c = tokenizer::paper_tokenizer_config();
  c.target_vocab_size = 1024;
  return c;
}

trainer::TrainConfig desk_train_config() {
  trainer::TrainConfig c(4, 2, 1, 64);
  c.lr.peak = 1e-3;
  c.lr.floor = 1e-4;
  c.lr.warmup_steps = 20;
  c.lr.total_steps = 400;
  c.eval_interval = 50;
  c.eval_batches = 4;
  c.checkpoint_interval = 200;
  c.seed = 1;
  return c;
}

void write_fixture_set(const std::filesystem::path& dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpus");
  fs::create_directories(dir / "configs");
  const auto docs = multilingual_corpus(600, seed);
  std::map<std::string, std::vector<corpus::Document>> by_source;
  for (const auto& d : docs) by_source[d.source].push_back(d);
  for (const auto& [source, list] : by_source) {
    // One gzip file keeps the compressed ingest path exercised.
    const std::string name = source == "code" ? source + ".jsonl.gz" : source + ".jsonl";
    corpus::write_documents(dir / "corpus" / name, list);
  }
  std::vector<corpus::Document> held;
  const auto texts = heldout_texts(100, seed);
  for (std::size_t i = 0; i < texts.size(); ++i) held.push_back({fmt::format("held{:04d}", i), "heldout", texts[i]});
  corpus::write_documents(dir / "heldout.jsonl", held);
  corpus::write_documents(dir / "tiny.jsonl", {{"tiny0", "tiny", tiny_corpus_text()}});
  eval::save_tasks(dir / "tasks.jsonl", synthetic_tasks(200, seed));

  nlohmann::json tok = desk_tokenizer_config();
  config::write_json_file(dir / "configs" / "tokenizer.json", tok);
  model::ModelConfig mc = model::model_preset("micro");
  mc.vocab_size = desk_tokenizer_config().target_vocab_size;
  config::write_json_file(dir / "configs" / "model.json", nlohmann::json(mc));
  config::write_json_file(dir / "configs" / "train.json", nlohmann::json(desk_train_config()));

  corpus::MixtureSchedule mix;
  mix.name = "fixture";
  mix.decay_start_fraction = 0.8;
  for (const auto& [source, list] : by_source) {
    const double w = source.starts_with("wiki") ? 2.0 : 1.0;
    mix.stable.push_back({source, {{{0.0, w}}}});
    mix.decay.push_back({source, {{{0.0, source.ends_with("_th") ? 3.0 : 1.0}}}});
  }
  config::write_json_file(dir / "configs" / "mixture.json", corpus::mixture_to_json(mix));
}

}  // namespace xmodel::fixtures
