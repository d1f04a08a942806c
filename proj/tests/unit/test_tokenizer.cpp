#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xmodel/error.hpp"
#include "xmodel/fixtures.hpp"
#include "xmodel/tokenizer/lattice.hpp"
#include "xmodel/tokenizer/pretokenize.hpp"
#include "xmodel/tokenizer/tokenizer.hpp"
#include "xmodel/tokenizer/trainer.hpp"

using namespace xmodel;
using namespace xmodel::tokenizer;

namespace {

UnigramVocab make_vocab(std::vector<std::pair<std::string, double>> entries, bool bytes = false) {
  auto pieces = UnigramVocab::reserved_pieces(bytes);
  for (auto& [text, p] : entries) pieces.push_back({text, std::log(p), PieceKind::kNormal});
  return UnigramVocab(std::move(pieces));
}

std::vector<std::string> piece_texts(const UnigramVocab& v, const Segmentation& s) {
  std::vector<std::string> out;
  for (const auto& seg : s.segments) out.push_back(v.piece(seg.id).text);
  return out;
}

TokenizerConfig small_config(std::size_t target) {
  auto cfg = fixtures::desk_tokenizer_config();
  cfg.target_vocab_size = target;
  return cfg;
}

}  // namespace

TEST(Pretokenize, SplitsDigits) {
  const auto cfg = paper_tokenizer_config();
  EXPECT_EQ(normalize_and_pretokenize("abc123", cfg), (std::vector<std::string>{"abc", "1", "2", "3"}));
  EXPECT_TRUE(normalize_and_pretokenize("", cfg).empty());
}

TEST(Pretokenize, KeepsSpaceRuns) {
  const auto cfg = paper_tokenizer_config();
  const auto parts = normalize_and_pretokenize("a   b", cfg);
  EXPECT_EQ(parts, (std::vector<std::string>{"a", "  ", " b"}));
  std::string joined;
  for (const auto& p : parts) joined += p;
  EXPECT_EQ(joined, "a   b");
}

TEST(Pretokenize, RejectsInvalidUtf8) {
  EXPECT_THROW(normalize_and_pretokenize("ab\xC3", paper_tokenizer_config()), Error);
}

TEST(Seed, SubstringsOfRepeatedCharacter) {
  auto cfg = small_config(8);
  cfg.byte_fallback = false;
  cfg.multispace_tokens = 0;
  const auto corpus = TrainingCorpus::from_strings({"aaaa"});
  const auto v = seed_vocabulary(corpus, cfg);
  for (const std::string s : {"a", "aa", "aaa", "aaaa"}) EXPECT_TRUE(v.find(s).has_value()) << s;
  const double pa = v.piece(*v.find("a")).logp;
  for (const std::string s : {"aa", "aaa", "aaaa"}) EXPECT_GT(pa, v.piece(*v.find(s)).logp) << s;

  cfg.max_piece_length = 2;
  const auto capped = seed_vocabulary(corpus, cfg);
  EXPECT_TRUE(capped.find("aa").has_value());
  EXPECT_FALSE(capped.find("aaa").has_value());
}

TEST(Seed, FullCoverageKeepsEveryCharacter) {
  const auto corpus = TrainingCorpus::from_strings({"abc", "xyz", "日本"});
  auto chars = required_characters(corpus, 1.0);
  std::sort(chars.begin(), chars.end());
  EXPECT_EQ(chars, (std::vector<std::string>{"a", "b", "c", "x", "y", "z", "日", "本"}));
}

TEST(Seed, RareCharacterFallsBackToBytes) {
  // 'q' carries 1/100001 of the mass, under the 1e-4 tail.
  TrainingCorpus corpus;
  corpus.sentences = {{"a", 60000.0}, {"b", 40000.0}, {"q", 1.0}};
  const auto chars = required_characters(corpus, 0.9999);
  EXPECT_EQ(chars, (std::vector<std::string>{"a", "b"}));

  auto cfg = small_config(300);
  const auto v = seed_vocabulary(corpus, cfg);
  EXPECT_FALSE(v.find("q").has_value());
  const TokenizerModel model(cfg, v);
  const auto ids = model.encode("q");
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], v.byte_id('q'));
  EXPECT_EQ(model.decode_text(ids), "q");
}

TEST(Seed, EmptyCorpusThrows) { EXPECT_THROW(seed_vocabulary(TrainingCorpus{}, small_config(300)), Error); }

TEST(Em, SinglePathLikelihood) {
  const auto v = make_vocab({{"a", 0.5}, {"b", 0.5}});
  const auto r = em_step(TrainingCorpus::from_strings({"ab"}), v);
  EXPECT_NEAR(r.log_likelihood, std::log(0.25), 1e-15);
  EXPECT_NEAR(r.log_likelihood, -1.3863, 5e-5);
}

TEST(Em, ExpectedCountsMatchEnumeration) {
  const double p = 0.5, q = 0.2, r = 0.3;
  const auto v = make_vocab({{"a", p}, {"b", q}, {"ab", r}});
  const auto corpus = TrainingCorpus::from_strings({"ab"});
  double ll = 0.0;
  const auto counts = expected_counts(corpus, v, &ll);
  // Two segmentations: [ab] with weight r and [a, b] with weight p*q.
  const double z = r + p * q;
  EXPECT_NEAR(ll, std::log(z), 1e-12);
  EXPECT_NEAR(counts[*v.find("ab")], r / z, 1e-12);
  EXPECT_NEAR(counts[*v.find("a")], p * q / z, 1e-12);
  EXPECT_NEAR(counts[*v.find("b")], p * q / z, 1e-12);
}

TEST(Em, UncoverableSentenceNamesCharacter) {
  const auto v = make_vocab({{"a", 1.0}});
  try {
    em_step(TrainingCorpus::from_strings({"aza"}), v);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("aza"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'z'"), std::string::npos) << msg;
  }
}

TEST(Em, ThreadCountDoesNotChangeResult) {
  const auto cfg = small_config(512);
  std::vector<std::string> docs;
  for (const auto& d : fixtures::multilingual_corpus(120, 3)) docs.push_back(d.text);
  const auto corpus = build_training_corpus(docs, cfg);
  const auto seed = seed_vocabulary(corpus, cfg);
  const auto restricted = restrict_to_vocab(corpus, seed);
  const auto one = em_step(restricted, seed, 1);
  const auto four = em_step(restricted, seed, 4);
  EXPECT_EQ(one.log_likelihood, four.log_likelihood);
  EXPECT_EQ(one.expected_counts, four.expected_counts);
}

TEST(Prune, ZeroCountPieceGoesFirst) {
  auto cfg = small_config(7);
  cfg.byte_fallback = false;
  cfg.multispace_tokens = 0;
  cfg.shrink_factor = 0.1;
  const auto v = make_vocab({{"a", 0.3}, {"b", 0.3}, {"ab", 0.3}, {"ba", 0.1}});
  const auto corpus = TrainingCorpus::from_strings({"ab", "abab"});
  const auto pruned = prune_vocabulary(corpus, v, cfg);
  EXPECT_EQ(pruned.size(), 7u);
  EXPECT_FALSE(pruned.find("ba").has_value());
  EXPECT_TRUE(pruned.find("ab").has_value());
  EXPECT_NEAR(pruned.normal_mass(), 1.0, 1e-12);

  const auto again = prune_vocabulary(corpus, pruned, cfg);
  EXPECT_EQ(again.pieces().size(), pruned.pieces().size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again.piece(static_cast<int>(i)).text, pruned.piece(static_cast<int>(i)).text);
    EXPECT_EQ(again.piece(static_cast<int>(i)).logp, pruned.piece(static_cast<int>(i)).logp);
  }
}

TEST(Prune, TargetBelowProtectedFloorThrows) {
  auto cfg = small_config(5);
  cfg.byte_fallback = false;
  cfg.multispace_tokens = 0;
  const auto v = make_vocab({{"a", 0.4}, {"b", 0.3}, {"ab", 0.3}});
  EXPECT_THROW(prune_vocabulary(TrainingCorpus::from_strings({"ab"}), v, cfg), Error);
}

TEST(Train, HitsTargetExactly) {
  auto cfg = small_config(300);
  cfg.byte_fallback = false;
  TrainingTrace trace;
  const auto model = TokenizerModel::train({fixtures::tiny_corpus_text()}, cfg, &trace);
  EXPECT_EQ(model.vocab_size(), 300u);
  EXPECT_FALSE(trace.vocab_sizes.empty());
}

TEST(Train, CompressesHeldOutText) {
  std::vector<std::string> docs;
  for (const auto& d : fixtures::multilingual_corpus(300, 0)) docs.push_back(d.text);
  const auto model = TokenizerModel::train(docs, fixtures::desk_tokenizer_config());
  const double rate = compression_rate(model, fixtures::heldout_texts(50, 1));
  EXPECT_LT(rate, 1.0);
}

TEST(Viterbi, WholePieceBeatsSplit) {
  const auto v = make_vocab({{"a", 0.4}, {"b", 0.3}, {"ab", 0.3}});
  const auto seg = viterbi(v, "ab");
  EXPECT_EQ(piece_texts(v, seg), (std::vector<std::string>{"ab"}));
  EXPECT_NEAR(seg.score, -1.2039728043259361, 1e-15);
}

TEST(Viterbi, SinglePieceIsOneToken) {
  const auto v = make_vocab({{"a", 0.2}, {"b", 0.2}, {"abba", 0.6}});
  EXPECT_EQ(viterbi(v, "abba").segments.size(), 1u);
}

TEST(Viterbi, TiesPreferLongestFirst) {
  // "b bb" and "bb b" have equal scores and token counts.
  const auto v = make_vocab({{"b", 0.25}, {"bb", 0.25}, {"a", 0.5}});
  const auto seg = viterbi(v, "bbb");
  EXPECT_EQ(piece_texts(v, seg), (std::vector<std::string>{"bb", "b"}));
  const auto want = oracle::exhaustive_viterbi(v, "bbb");
  ASSERT_EQ(want.pieces.size(), 2u);
  EXPECT_EQ(std::get<0>(want.pieces[0]), *v.find("bb"));
}

TEST(Encode, MissingCharacterBecomesUtf8Bytes) {
  const auto v = make_vocab({{"a", 1.0}}, true);
  const TokenizerModel model(small_config(300), v);
  const auto ids = model.encode("日");
  EXPECT_EQ(ids, (std::vector<int>{v.byte_id(0xE6), v.byte_id(0x97), v.byte_id(0xA5)}));
}

TEST(Decode, ByteTokens) {
  const auto v = make_vocab({{"a", 1.0}}, true);
  const TokenizerModel model(small_config(300), v);
  const std::vector<int> ids = {v.byte_id(0xE6), v.byte_id(0x97), v.byte_id(0xA5)};
  const auto r = model.decode(ids);
  EXPECT_EQ(r.text, "日");
  EXPECT_FALSE(r.invalid_bytes);
  EXPECT_EQ(model.decode({}).text, "");
}

TEST(Decode, BrokenByteRunIsFlagged) {
  const auto v = make_vocab({{"a", 1.0}}, true);
  const TokenizerModel model(small_config(300), v);
  const std::vector<int> ids = {v.byte_id(0xE6), v.byte_id(0x97), *v.find("a")};
  const auto r = model.decode(ids);
  EXPECT_TRUE(r.invalid_bytes);
  EXPECT_EQ(r.text, "\xEF\xBF\xBD" "a");
}

TEST(Decode, OutOfRangeIdThrows) {
  const auto v = make_vocab({{"a", 1.0}}, true);
  const TokenizerModel model(small_config(300), v);
  const std::vector<int> ids = {static_cast<int>(v.size())};
  EXPECT_THROW(model.decode(ids), Error);
}

TEST(Compression, CharacterLevelIsOne) {
  auto cfg = small_config(300);
  cfg.byte_fallback = false;
  const TokenizerModel model(cfg, make_vocab({{"a", 0.5}, {"b", 0.5}}));
  EXPECT_EQ(compression_rate(model, {"abba", "ab"}), 1.0);
}

TEST(Compression, WholeCorpusPiece) {
  auto cfg = small_config(300);
  cfg.byte_fallback = false;
  const TokenizerModel model(cfg, make_vocab({{"a", 0.25}, {"b", 0.25}, {"abbab", 0.5}}));
  EXPECT_EQ(compression_rate(model, {"abbab"}), 1.0 / 5.0);
}

TEST(Compression, EmptyCorpusThrows) {
  const TokenizerModel model(small_config(300), make_vocab({{"a", 1.0}}));
  EXPECT_THROW(compression_rate(model, {}), Error);
}

TEST(Compression, ReferenceRow) {
  bool found = false;
  for (const auto& r : kCompressionReferences)
    if (r.vocab_size == 65280) found = r.rate == 0.3800;
  EXPECT_TRUE(found);
}

TEST(Model, SerializeRoundTrip) {
  std::vector<std::string> docs;
  for (const auto& d : fixtures::multilingual_corpus(150, 4)) docs.push_back(d.text);
  auto cfg = small_config(600);
  const auto model = TokenizerModel::train(docs, cfg);
  const auto copy = TokenizerModel::deserialize(model.serialize());
  EXPECT_EQ(copy.serialize(), model.serialize());
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto s = fixtures::property_string(rng);
    const auto ids = model.encode(s);
    EXPECT_EQ(copy.encode(s), ids);
    EXPECT_EQ(model.decode_text(ids), s);
  }
}

TEST(Model, SpaceRunsRoundTrip) {
  std::vector<std::string> docs;
  for (const auto& d : fixtures::multilingual_corpus(150, 4)) docs.push_back(d.text);
  const auto model = TokenizerModel::train(docs, small_config(600));
  for (int n = 1; n <= 8; ++n) {
    const std::string s = "x" + std::string(static_cast<std::size_t>(n), ' ') + "y";
    EXPECT_EQ(model.decode_text(model.encode(s)), s) << n;
  }
}
