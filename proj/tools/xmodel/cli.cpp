#include "xmodel/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "xmodel/corpus/batching.hpp"
#include "xmodel/corpus/dedup.hpp"
#include "xmodel/corpus/ingest.hpp"
#include "xmodel/corpus/mixture.hpp"
#include "xmodel/error.hpp"
#include "xmodel/eval/harness.hpp"
#include "xmodel/eval/tasks.hpp"
#include "xmodel/fixtures.hpp"
#include "xmodel/model/config.hpp"
#include "xmodel/model/params.hpp"
#include "xmodel/model/transformer.hpp"
#include "xmodel/tensor/autograd.hpp"
#include "xmodel/tokenizer/tokenizer.hpp"
#include "xmodel/tokenizer/trainer.hpp"
#include "xmodel/trainer/trainer.hpp"
#include "xmodel/util/config.hpp"
#include "xmodel/util/log.hpp"
#include "xmodel/util/rng.hpp"

namespace xmodel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Path to a JSON file, or the name of a built-in preset.
model::ModelConfig load_model_config(const std::string& spec) {
  if (fs::exists(spec)) return model::model_config_from_json(config::read_json_file(spec));
  return model::model_preset(spec);
}

std::vector<corpus::Document> read_glob(const std::string& pattern) {
  corpus::IngestStats stats;
  auto docs = corpus::read_documents(corpus::expand_glob(pattern), &stats);
  log::info("ingest", {{"pattern", pattern},
                       {"lines", stats.lines},
                       {"documents", stats.documents},
                       {"malformed", stats.malformed}});
  return docs;
}

std::vector<std::string> texts_of(const std::vector<corpus::Document>& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.text);
  return out;
}

void echo(const fs::path& dir, const std::string& name, const json& j) {
  fs::create_directories(dir);
  config::write_json_file(dir / name, j);
}

// Input lines from --text or stdin.
std::vector<std::string> input_lines(const std::string& text) {
  if (!text.empty()) return {text};
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(std::cin, line)) lines.push_back(line);
  return lines;
}

const CLI::Validator kExistingOrPreset(
    [](std::string& s) {
      return fs::exists(s) || s.find('/') == std::string::npos ? std::string() : "no such file: " + s;
    },
    "FILE|PRESET");

struct Command {
  CLI::App* app;
  std::function<int()> run;
};

// --- train-tokenizer --------------------------------------------------------

Command add_train_tokenizer(CLI::App& root) {
  struct Opts {
    std::string config, corpus, out;
    std::size_t threads = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("train-tokenizer", "Train a unigram tokenizer on JSONL documents");
  app->add_option("--config", o->config, "Tokenizer config JSON")->required()->check(CLI::ExistingFile);
  app->add_option("--corpus", o->corpus, "Glob of JSONL(.gz) files")->required();
  app->add_option("--out", o->out, "Output vocab file")->required();
  app->add_option("--threads", o->threads, "E-step threads (overrides config)");
  return {app, [o] {
            auto cfg = tokenizer::tokenizer_config_from_json(config::read_json_file(o->config));
            if (o->threads > 0) cfg.num_threads = o->threads;
            const auto docs = read_glob(o->corpus);
            tokenizer::TrainingTrace trace;
            const auto model = tokenizer::TokenizerModel::train(texts_of(docs), cfg, &trace);
            const fs::path out(o->out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            model.save(out);
            echo(out.parent_path().empty() ? fs::path(".") : out.parent_path(), out.filename().string() + ".config.json",
                 json(cfg));
            log::info("tokenizer trained", {{"vocab_size", model.vocab_size()},
                                            {"prune_rounds", trace.vocab_sizes.size()},
                                            {"out", out.string()}});
            return 0;
          }};
}

// --- encode / decode --------------------------------------------------------

Command add_encode(CLI::App& root) {
  struct Opts {
    std::string model, text;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("encode", "Print token ids for --text or each stdin line");
  app->add_option("--model", o->model, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--text", o->text, "Text to encode (default: stdin lines)");
  return {app, [o] {
            const auto tok = tokenizer::TokenizerModel::load(o->model);
            for (const auto& line : input_lines(o->text)) {
              const auto ids = tok.encode(line);
              fmt::print("{}\n", fmt::join(ids, " "));
            }
            return 0;
          }};
}

Command add_decode(CLI::App& root) {
  struct Opts {
    std::string model, ids;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("decode", "Print text for space-separated ids in --ids or each stdin line");
  app->add_option("--model", o->model, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--ids", o->ids, "Ids to decode (default: stdin lines)");
  return {app, [o] {
            const auto tok = tokenizer::TokenizerModel::load(o->model);
            for (const auto& line : input_lines(o->ids)) {
              std::istringstream in(line);
              std::vector<int> ids;
              std::string word;
              while (in >> word) {
                try {
                  std::size_t used = 0;
                  ids.push_back(std::stoi(word, &used));
                  if (used != word.size()) throw std::invalid_argument(word);
                } catch (const std::logic_error&) {
                  throw Error(fmt::format("not a token id: \"{}\"", word));
                }
              }
              const auto r = tok.decode(ids);
              if (r.invalid_bytes) log::warn("invalid UTF-8 byte run replaced");
              fmt::print("{}\n", r.text);
            }
            return 0;
          }};
}

// --- compress-bench ---------------------------------------------------------

Command add_compress_bench(CLI::App& root) {
  struct Opts {
    std::string model, corpus, unit = "chars";
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("compress-bench", "Tokens per character (or byte) over a corpus");
  app->add_option("--model", o->model, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--corpus", o->corpus, "Glob of JSONL(.gz) files")->required();
  app->add_option("--unit", o->unit, "chars or bytes")->check(CLI::IsMember({"chars", "bytes"}));
  return {app, [o] {
            const auto tok = tokenizer::TokenizerModel::load(o->model);
            const auto texts = texts_of(read_glob(o->corpus));
            const auto unit =
                o->unit == "bytes" ? tokenizer::CompressionUnit::kBytes : tokenizer::CompressionUnit::kCharacters;
            json refs = json::array();
            for (const auto& r : tokenizer::kCompressionReferences) {
              refs.push_back({{"name", r.name}, {"vocab_size", r.vocab_size}, {"rate", r.rate}});
            }
            const json report = {{"model", o->model},
                                 {"vocab_size", tok.vocab_size()},
                                 {"documents", texts.size()},
                                 {"unit", o->unit},
                                 {"rate", tokenizer::compression_rate(tok, texts, unit)},
                                 {"references", refs}};
            fmt::print("{}\n", report.dump(2));
            return 0;
          }};
}

// --- dedup ------------------------------------------------------------------

Command add_dedup(CLI::App& root) {
  struct Opts {
    std::string in, out, report;
    corpus::DedupConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("dedup", "SimHash near-duplicate removal");
  app->add_option("--in", o->in, "Glob of JSONL(.gz) files")->required();
  app->add_option("--out", o->out, "Output directory (one JSONL per source)")->required();
  app->add_option("--threshold", o->cfg.hamming_threshold, "Max Hamming distance counted as duplicate")
      ->capture_default_str();
  app->add_option("--report", o->report, "Drop report JSONL");
  app->add_option("--shingle", o->cfg.shingle_len, "Words per shingle")->capture_default_str();
  app->add_option("--source-filter", o->cfg.source_filter, "Only sources containing this")->capture_default_str();
  app->add_flag("--all-sources", o->cfg.all_sources, "Deduplicate every source");
  return {app, [o] {
            o->cfg.validate();
            const auto docs = read_glob(o->in);
            const auto result = corpus::dedup(docs, o->cfg);
            std::map<std::string, std::vector<corpus::Document>> by_source;
            for (const auto& d : result.kept) by_source[d.source].push_back(d);
            const fs::path out(o->out);
            fs::create_directories(out);
            for (const auto& [source, list] : by_source) corpus::write_documents(out / (source + ".jsonl"), list);
            if (!o->report.empty()) {
              std::ofstream rep(o->report, std::ios::binary);
              if (!rep) throw Error(fmt::format("cannot write {}", o->report));
              for (const auto& r : result.dropped) rep << json(r).dump() << '\n';
            }
            const json summary = {{"documents", docs.size()},
                                  {"kept", result.kept.size()},
                                  {"dropped", result.dropped.size()},
                                  {"threshold", o->cfg.hamming_threshold}};
            fmt::print("{}\n", summary.dump());
            return 0;
          }};
}

// --- pretrain ---------------------------------------------------------------

std::vector<corpus::TokenBatch> make_valset(const std::vector<corpus::TokenSource>& sources,
                                            const tokenizer::TokenizerModel& tok, const trainer::TrainConfig& tc) {
  corpus::BatchSampler sampler(sources, tok.bos_id(), tok.eos_id(), Rng::derive(tc.seed, "val").next_u64());
  corpus::WeightMap weights;
  for (const auto& s : sources) weights.emplace_back(s.name, 1.0);
  std::vector<corpus::TokenBatch> out;
  for (std::size_t i = 0; i < tc.eval_batches; ++i) out.push_back(sampler.sample(weights, tc.micro_batch, tc.seq_len));
  return out;
}

Command add_pretrain(CLI::App& root) {
  struct Opts {
    std::string model_config, train_config, mixture, tokenizer, corpus, valid, out, resume;
    std::int64_t steps = -1;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("pretrain", "Pretrain on a weighted mixture of sources");
  app->add_option("--model-config", o->model_config, "Model config JSON or preset")->required()->check(kExistingOrPreset);
  app->add_option("--train-config", o->train_config, "Train config JSON")->required()->check(CLI::ExistingFile);
  app->add_option("--mixture", o->mixture, "Mixture JSON or preset")->required()->check(kExistingOrPreset);
  app->add_option("--tokenizer", o->tokenizer, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--corpus", o->corpus, "Glob of JSONL(.gz) training files")->required();
  app->add_option("--valid", o->valid, "Glob of JSONL(.gz) validation files");
  app->add_option("--out", o->out, "Output directory")->required();
  app->add_option("--steps", o->steps, "Stop after this step (default: total_steps)");
  app->add_option("--resume", o->resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
  app->add_option("--seed", o->seed, "Overrides the train config seed");
  return {app, [o] {
            auto mc = load_model_config(o->model_config);
            auto tc = trainer::train_config_from_json(config::read_json_file(o->train_config));
            if (o->seed) tc.seed = *o->seed;
            const auto mixture = corpus::load_mixture(o->mixture);
            const auto tok = tokenizer::TokenizerModel::load(o->tokenizer);
            if (mc.vocab_size != tok.vocab_size()) {
              throw ConfigError(fmt::format("model vocab_size {} != tokenizer vocab size {}", mc.vocab_size,
                                            tok.vocab_size()));
            }
            auto sources = corpus::tokenize_sources(read_glob(o->corpus), tok);
            const auto wanted = mixture.sources();
            std::erase_if(sources, [&](const corpus::TokenSource& s) {
              return std::find(wanted.begin(), wanted.end(), s.name) == wanted.end();
            });
            for (const auto& name : wanted) {
              if (std::none_of(sources.begin(), sources.end(), [&](const auto& s) { return s.name == name; })) {
                throw ConfigError(fmt::format("mixture source \"{}\" has no documents in {}", name, o->corpus));
              }
            }
            std::vector<corpus::TokenBatch> valset;
            if (!o->valid.empty()) valset = make_valset(corpus::tokenize_sources(read_glob(o->valid), tok), tok, tc);

            const fs::path out(o->out);
            echo(out, "model_config.json", json(mc));
            echo(out, "train_config.json", json(tc));
            echo(out, "mixture.json", corpus::mixture_to_json(mixture));

            trainer::TrainState state(mc, tc, model::init_params(mc, tc.seed));
            corpus::BatchSampler sampler(std::move(sources), tok.bos_id(), tok.eos_id(), tc.seed, tc.wrap_around);
            trainer::Trainer tr(std::move(state), std::move(sampler), mixture, std::move(valset));
            if (!o->resume.empty()) {
              tr.load(o->resume);
              log::info("resumed", {{"checkpoint", o->resume}, {"step", tr.state().step}});
            }
            trainer::MetricsWriter metrics(out / "metrics.csv", !o->resume.empty());
            fs::create_directories(out / "checkpoints");
            const std::int64_t until = o->steps >= 0 ? o->steps : tc.lr.total_steps;
            const auto history = tr.run(until, &metrics, out / "checkpoints");
            tr.save(out / "final.ckpt");
            log::info("pretrain done", {{"step", tr.state().step},
                                        {"tokens_seen", tr.state().tokens_seen},
                                        {"final_loss", history.empty() ? 0.0 : history.back().train_loss}});
            return 0;
          }};
}

// --- sft --------------------------------------------------------------------

std::vector<corpus::SftExample> read_sft(const fs::path& path, const tokenizer::TokenizerModel& tok) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::vector<corpus::SftExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
    config::StrictObject obj(j, fmt::format("{}:{}", path.string(), n));
    std::string prompt, response;
    obj.get("prompt", prompt);
    obj.get("response", response);
    obj.finish();
    out.push_back({tok.encode(prompt), tok.encode(response)});
  }
  return out;
}

Command add_sft(CLI::App& root) {
  struct Opts {
    std::string model_config = "micro", train_config, tokenizer, data, init, out;
    std::int64_t steps = 0;
    bool full = true;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("sft", "Supervised fine-tuning on prompt/response JSONL");
  app->add_option("--model-config", o->model_config, "Model config JSON or preset (ignored with --init)")
      ->check(kExistingOrPreset);
  app->add_option("--train-config", o->train_config, "Batch shape and loop settings; lr and decay come from the SFT preset")
      ->check(CLI::ExistingFile);
  app->add_option("--tokenizer", o->tokenizer, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--data", o->data, "JSONL with prompt and response fields")->required()->check(CLI::ExistingFile);
  app->add_option("--init", o->init, "Checkpoint to start from")->check(CLI::ExistingFile);
  app->add_option("--out", o->out, "Output directory")->required();
  app->add_option("--steps", o->steps, "Total optimizer steps")->required()->check(CLI::PositiveNumber);
  app->add_flag("--loss-on-full-sequence,!--no-loss-on-full-sequence", o->full,
                "Loss on prompt and response tokens (default on)");
  app->add_option("--seed", o->seed, "Overrides the train config seed");
  return {app, [o] {
            const auto tok = tokenizer::TokenizerModel::load(o->tokenizer);
            model::ModelConfig mc;
            model::ModelParams params;
            trainer::TrainConfig tc = o->train_config.empty()
                                          ? trainer::TrainConfig(4, 1, 1, 256)
                                          : trainer::train_config_from_json(config::read_json_file(o->train_config));
            if (o->seed) tc.seed = *o->seed;
            const auto preset = trainer::sft_preset(o->steps);
            tc.lr = preset.lr;
            tc.weight_decay = preset.weight_decay;
            if (!o->init.empty()) {
              auto loaded = trainer::load_model(o->init);
              mc = loaded.config;
              params = std::move(loaded.params);
            } else {
              mc = load_model_config(o->model_config);
              params = model::init_params(mc, tc.seed);
            }
            if (mc.vocab_size != tok.vocab_size()) {
              throw ConfigError(fmt::format("model vocab_size {} != tokenizer vocab size {}", mc.vocab_size,
                                            tok.vocab_size()));
            }
            const auto examples = read_sft(o->data, tok);
            const fs::path out(o->out);
            echo(out, "model_config.json", json(mc));
            echo(out, "train_config.json", json(tc));
            echo(out, "run.json", {{"loss_on_full_sequence", o->full}, {"seed", tc.seed}, {"init", o->init}});
            trainer::TrainState state(mc, tc, std::move(params));
            trainer::MetricsWriter metrics(out / "metrics.csv");
            trainer::run_sft(state, examples, o->full, tok.bos_id(), tok.eos_id(), tok.pad_id(), &metrics);
            trainer::write_checkpoint(out / "final.ckpt",
                                      trainer::to_checkpoint(state, {{"loss_on_full_sequence", o->full}}));
            log::info("sft done", {{"step", state.step}, {"examples", examples.size()}});
            return 0;
          }};
}

// --- eval -------------------------------------------------------------------

Command add_eval(CLI::App& root) {
  struct Opts {
    std::string checkpoint, tokenizer, tasks, report, chat_template, mode = "generate", header;
    eval::EvalOptions opts;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("eval", "Few-shot multiple-choice evaluation");
  app->add_option("--checkpoint", o->checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  app->add_option("--tokenizer", o->tokenizer, "Vocab file")->required()->check(CLI::ExistingFile);
  app->add_option("--tasks", o->tasks, "Task JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--shots", o->opts.n_shots, "Exemplars per prompt")->capture_default_str();
  app->add_option("--seed", o->opts.seed, "Shuffle and exemplar seed")->capture_default_str();
  app->add_option("--mode", o->mode, "generate or loglik")->check(CLI::IsMember({"generate", "loglik"}))
      ->capture_default_str();
  app->add_option("--report", o->report, "Report JSON")->required();
  app->add_option("--chat-template", o->chat_template, "File containing a {prompt} template")
      ->check(CLI::ExistingFile);
  app->add_option("--header", o->header, "Replace the instruction line");
  app->add_option("--max-new-tokens", o->opts.max_new_tokens, "Generation budget")->capture_default_str();
  return {app, [o] {
            auto opts = o->opts;
            opts.mode = o->mode == "loglik" ? eval::EvalMode::kLoglik : eval::EvalMode::kGenerate;
            if (!o->chat_template.empty()) opts.chat_template = read_file(o->chat_template);
            if (!o->header.empty()) opts.header = o->header;
            opts.task_name = fs::path(o->tasks).stem().string();
            auto loaded = trainer::load_model(o->checkpoint);
            const auto tok = tokenizer::TokenizerModel::load(o->tokenizer);
            if (loaded.config.vocab_size != tok.vocab_size()) {
              throw ConfigError(fmt::format("checkpoint vocab_size {} != tokenizer vocab size {}",
                                            loaded.config.vocab_size, tok.vocab_size()));
            }
            const auto items = eval::load_tasks(o->tasks);
            eval::TransformerLM lm(std::move(loaded.params), loaded.config);
            eval::TokenizerCodec codec(tok);
            const auto report = eval::run_eval(lm, codec, items, opts);
            std::ofstream out(o->report, std::ios::binary);
            if (!out) throw Error(fmt::format("cannot write {}", o->report));
            out << report.to_json().dump(2) << '\n';
            fmt::print("{}\n", json({{"task", report.task},
                                     {"accuracy", report.accuracy},
                                     {"correct", report.correct},
                                     {"unparsed", report.unparsed},
                                     {"n_items", report.items.size()}})
                                   .dump());
            return 0;
          }};
}

// --- gradcheck --------------------------------------------------------------

Command add_gradcheck(CLI::App& root) {
  struct Opts {
    std::string config = "micro";
    std::uint64_t seed = 0;
    std::size_t batch = 1, seq = 8, per_tensor = 6;
    double tolerance = 1e-4;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("gradcheck", "Whole-model gradient check against central differences (64-bit)");
  app->add_option("--config", o->config, "Model config JSON or preset")->check(kExistingOrPreset)->capture_default_str();
  app->add_option("--seed", o->seed, "Init and token seed")->capture_default_str();
  app->add_option("--batch", o->batch)->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--seq", o->seq)->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--per-tensor", o->per_tensor, "Components checked per parameter tensor")->capture_default_str();
  app->add_option("--tolerance", o->tolerance)->capture_default_str();
  return {app, [o] {
            const auto mc = load_model_config(o->config);
            tensor::OptionsScope scope({true, tensor::Precision::kFloat64, true});
            auto params = model::init_params(mc, o->seed);
            Rng rng = Rng::derive(o->seed, "gradcheck/tokens");
            std::vector<int> tokens(o->batch * o->seq), targets(tokens.size());
            for (auto& t : tokens) t = static_cast<int>(rng.uniform(mc.vocab_size));
            for (auto& t : targets) t = static_cast<int>(rng.uniform(mc.vocab_size));
            const std::vector<std::uint8_t> mask(tokens.size(), 1);
            auto tensors = params.tensors();
            const double err = tensor::finite_diff_check_sampled(
                [&] { return model::lm_loss(model::forward(params, mc, tokens, o->batch, o->seq), targets, mask); },
                tensors, o->per_tensor, o->seed);
            const bool ok = err < o->tolerance;
            fmt::print("{}\n", json({{"max_rel_err", err},
                                      {"tolerance", o->tolerance},
                                      {"pass", ok},
                                      {"seed", o->seed},
                                      {"batch", o->batch},
                                      {"seq", o->seq},
                                      {"per_tensor", o->per_tensor},
                                      {"model_config", mc}})
                                    .dump());
            return ok ? 0 : 2;
          }};
}

// --- make-fixtures ----------------------------------------------------------

Command add_make_fixtures(CLI::App& root) {
  struct Opts {
    std::string out;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("make-fixtures", "Write the deterministic multilingual fixture set");
  app->add_option("--out", o->out, "Output directory")->required();
  app->add_option("--seed", o->seed)->capture_default_str();
  return {app, [o] {
            fixtures::write_fixture_set(o->out, o->seed);
            log::info("fixtures written", {{"out", o->out}, {"seed", o->seed}});
            return 0;
          }};
}

std::optional<log::Level> parse_level(const std::string& s) {
  if (s == "debug") return log::Level::kDebug;
  if (s == "info") return log::Level::kInfo;
  if (s == "warn") return log::Level::kWarn;
  if (s == "error") return log::Level::kError;
  return std::nullopt;
}

}  // namespace

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app("xmodel: tokenizer, data pipeline, training and evaluation for small decoder-only LMs", "xmodel");
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  std::vector<Command> commands = {add_train_tokenizer(app), add_encode(app), add_decode(app),
                                   add_compress_bench(app),  add_dedup(app),  add_pretrain(app),
                                   add_sft(app),             add_eval(app),   add_gradcheck(app),
                                   add_make_fixtures(app)};
  if (args.empty()) {
    std::cerr << app.help();
    return 1;
  }
  try {
    // CLI11 wants the reversed vector form.
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  log::set_level(*parse_level(level));

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      return cmd.run();
    } catch (const std::exception& e) {
      log::error(e.what(), {{"command", cmd.app->get_name()}});
      return 2;
    }
  }
  return 1;
}

}  // namespace xmodel::cli
