#include "xmodel/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/model/transformer.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::eval {
namespace {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

std::string mode_name(EvalMode m) { return m == EvalMode::kGenerate ? "generate" : "loglik"; }

}  // namespace

double LanguageModel::continuation_logprob(std::span<const int> context, std::span<const int> continuation) {
  std::vector<int> ctx(context.begin(), context.end());
  double total = 0.0;
  for (int tok : continuation) {
    const auto lp = next_logprobs(ctx);
    total += lp.at(static_cast<std::size_t>(tok));
    ctx.push_back(tok);
  }
  return total;
}

TransformerLM::TransformerLM(model::ModelParams params, model::ModelConfig config)
    : params_(std::move(params)), config_(std::move(config)) {
  config_.validate();
}

std::vector<double> TransformerLM::next_logprobs(std::span<const int> context) {
  if (context.empty()) throw Error("next_logprobs: empty context");
  tensor::NoGradScope no_grad;
  const auto logits = model::forward(params_, config_, context, 1, context.size());
  const std::size_t v = config_.vocab_size;
  return log_softmax(logits.data().subspan((context.size() - 1) * v, v));
}

double TransformerLM::continuation_logprob(std::span<const int> context, std::span<const int> continuation) {
  if (context.empty()) throw Error("continuation_logprob: empty context");
  if (continuation.empty()) return 0.0;
  std::vector<int> all(context.begin(), context.end());
  all.insert(all.end(), continuation.begin(), continuation.end() - 1);
  if (all.size() > config_.context_len) {
    throw Error(fmt::format("continuation_logprob: {} tokens exceed context_len {}", all.size() + 1, config_.context_len));
  }
  tensor::NoGradScope no_grad;
  const auto logits = model::forward(params_, config_, all, 1, all.size());
  const std::size_t v = config_.vocab_size;
  double total = 0.0;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const std::size_t row = context.size() - 1 + i;
    total += log_softmax(logits.data().subspan(row * v, v))[static_cast<std::size_t>(continuation[i])];
  }
  return total;
}

std::vector<int> prompt_ids(const Codec& codec, std::string_view prompt) {
  std::vector<int> ids{codec.bos_id()};
  const auto body = codec.encode(prompt);
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

std::vector<int> generate_greedy(LanguageModel& lm, const Codec& codec, std::string_view prompt,
                                 std::size_t max_new_tokens) {
  std::vector<int> ctx = prompt_ids(codec, prompt);
  if (lm.context_len() <= max_new_tokens || ctx.size() >= lm.context_len() - max_new_tokens) {
    throw Error(fmt::format("generate_greedy: prompt of {} tokens leaves no room for {} new tokens in context {}", ctx.size(),
                            max_new_tokens, lm.context_len()));
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < max_new_tokens; ++i) {
    const auto lp = lm.next_logprobs(ctx);
    int best = 0;
    for (std::size_t t = 1; t < lp.size(); ++t) {
      if (lp[t] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(t);
    }
    if (best == codec.eos_id()) break;
    out.push_back(best);
    ctx.push_back(best);
  }
  return out;
}

std::size_t score_loglikelihood(LanguageModel& lm, const Codec& codec, std::string_view prompt,
                                std::span<const std::string> options) {
  if (options.empty()) throw Error("score_loglikelihood: no options");
  const std::vector<int> ctx = prompt_ids(codec, prompt);
  std::size_t best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < options.size(); ++i) {
    const auto cont = codec.encode(" " + options[i]);
    if (ctx.size() + cont.size() > lm.context_len()) {
      throw Error(fmt::format("score_loglikelihood: prompt plus option {} is {} tokens, context is {}", i,
                              ctx.size() + cont.size(), lm.context_len()));
    }
    const double lp = lm.continuation_logprob(ctx, cont);
    if (i == 0 || lp > best_lp) {
      best = i;
      best_lp = lp;
    }
  }
  return best;
}

nlohmann::json EvalReport::to_json() const {
  auto items_json = nlohmann::json::array();
  for (const auto& r : items) {
    items_json.push_back({{"id", r.id},
                          {"category", r.category},
                          {"predicted", r.predicted},
                          {"gold", r.gold},
                          {"correct", r.correct},
                          {"shots", r.shots},
                          {"continuation", r.continuation}});
  }
  return {{"task", task},         {"mode", mode},         {"n_shots", n_shots},   {"seed", seed},
          {"n_items", items.size()}, {"correct", correct}, {"unparsed", unparsed}, {"accuracy", accuracy},
          {"items", items_json}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.task = j.at("task").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.n_shots = j.at("n_shots").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.correct = j.at("correct").get<std::size_t>();
    r.unparsed = j.at("unparsed").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& it : j.at("items")) {
      ItemRecord rec;
      rec.id = it.at("id").get<std::string>();
      rec.category = it.at("category").get<std::string>();
      rec.predicted = it.at("predicted").get<std::string>();
      rec.gold = it.at("gold").get<std::string>();
      rec.correct = it.at("correct").get<bool>();
      rec.shots = it.at("shots").get<std::size_t>();
      rec.continuation = it.at("continuation").get<std::string>();
      r.items.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("eval report: {}", e.what()));
  }
  return r;
}

std::vector<std::size_t> sample_fewshot(std::span<const EvalItem> items, std::size_t index, std::size_t n,
                                        std::uint64_t seed) {
  if (items.size() < n + 1) {
    throw Error(fmt::format("need at least {} items for {}-shot evaluation, have {}", n + 1, n, items.size()));
  }
  std::vector<std::size_t> pool;
  pool.reserve(items.size() - 1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != index) pool.push_back(i);
  }
  Rng rng = Rng::derive(seed, "shots/" + items[index].id);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform(pool.size() - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(n);
  return pool;
}

EvalReport run_eval(LanguageModel& lm, const Codec& codec, std::span<const EvalItem> items, const EvalOptions& options) {
  if (items.size() < options.n_shots + 1) {
    throw Error(fmt::format("task has {} items; {}-shot evaluation needs at least {}", items.size(), options.n_shots,
                            options.n_shots + 1));
  }
  EvalReport report;
  report.task = options.task_name;
  report.mode = mode_name(options.mode);
  report.n_shots = options.n_shots;
  report.seed = options.seed;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& item = items[i];
    const auto shot_idx = sample_fewshot(items, i, options.n_shots, options.seed);
    std::vector<EvalItem> shots;
    for (std::size_t s : shot_idx) shots.push_back(items[s]);

    // Drop exemplars from the end until the prompt fits.
    PromptInstance prompt;
    std::size_t used = shots.size();
    for (;;) {
      prompt = build_prompt(item, std::span(shots.data(), used), options.seed, options.header, options.chat_template);
      const std::size_t len = prompt_ids(codec, prompt.text).size();
      std::size_t need = len + (options.mode == EvalMode::kGenerate ? options.max_new_tokens : 0);
      if (options.mode == EvalMode::kLoglik) {
        std::size_t longest = 0;
        for (const auto& o : item.options) longest = std::max(longest, codec.encode(" " + o).size());
        need += longest;
      }
      const bool fits = options.mode == EvalMode::kGenerate ? need < lm.context_len() : need <= lm.context_len();
      if (fits) break;
      if (used == 0) throw Error(fmt::format("item {}: 0-shot prompt does not fit context {}", item.id, lm.context_len()));
      --used;
    }

    ItemRecord rec;
    rec.id = item.id;
    rec.category = item.category;
    rec.gold = std::string(1, prompt.gold);
    rec.shots = used;
    if (options.mode == EvalMode::kGenerate) {
      const auto gen = generate_greedy(lm, codec, prompt.text, options.max_new_tokens);
      rec.continuation = codec.decode(gen);
      const auto letter = match_choice(rec.continuation);
      rec.predicted = letter ? std::string(1, *letter) : "unparsed";
    } else {
      std::vector<std::string> shown;
      for (int p = 0; p < 4; ++p) shown.push_back(item.options[static_cast<std::size_t>(prompt.permutation[p])]);
      rec.predicted = std::string(1, kLetters[score_loglikelihood(lm, codec, prompt.text, shown)]);
    }
    rec.correct = rec.predicted == rec.gold;
    if (rec.predicted == "unparsed") ++report.unparsed;
    if (rec.correct) ++report.correct;
    report.items.push_back(std::move(rec));
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.items.size());
  return report;
}

}  // namespace xmodel::eval
