// Copyright 2026 The adaptok Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracle.hpp"
#include "test_support.hpp"

namespace adaptok {
namespace {

struct Scenario {
  testing::TempDir dir;
  testing::ToySpec spec;
  std::string domain_text, base_text;
  PipelineConfig cfg;

  explicit Scenario(std::uint64_t seed, std::size_t words = 4000) {
    std::mt19937_64 rng(seed);
    spec = testing::random_toy_tokenizer(rng, "abcdefg", 24);
    auto lex_d = testing::random_lexicon(rng, "abcdefg", 80, 2, 10);
    auto lex_b = testing::random_lexicon(rng, "abcdefg", 80, 2, 10);
    lex_b.insert(lex_b.begin() + 10, lex_d.begin() + 5, lex_d.begin() + 40);
    domain_text = testing::zipf_corpus(rng, lex_d, words);
    base_text = testing::zipf_corpus(rng, lex_b, words);

    testing::write_tokenizer_dir(dir / "tok", spec);
    testing::write_text(dir / "domain.txt", domain_text);
    testing::write_text(dir / "base.txt", base_text);
    auto tok = spec.build();
    testing::write_text(dir / "emb.txt", write_word2vec_text(testing::random_embeddings(rng, tok, 8)));

    cfg.base.paths = {(dir / "base.txt").string()};
    cfg.domain.paths = {(dir / "domain.txt").string()};
    cfg.tokenizer_dir = dir / "tok";
    cfg.out_dir = dir / "out";
    cfg.base_embeddings = dir / "emb.txt";
    cfg.selection.eta = 5;
    cfg.selection.f_min = 3;
    cfg.threads = 2;
    cfg.sgns.dim = 6;
    cfg.sgns.min_count = 1;
    cfg.sgns.sample = 0;
    cfg.sgns.epochs = 2;
  }

  std::vector<oracle::Row> expected() const {
    oracle::Options o;
    o.lambda = cfg.lambda;
    o.conditional = cfg.selection.mode == ProbabilityMode::conditional;
    o.eta = cfg.selection.eta;
    o.f_min = static_cast<long>(cfg.selection.f_min);
    o.max_len = cfg.selection.max_len;
    o.require_both = cfg.selection.require_both;
    return oracle::select({spec.vocab, spec.merges}, domain_text, base_text, o);
  }
};

std::vector<float> vec(std::span<const float> s) { return {s.begin(), s.end()}; }

std::string bundle_bytes(const std::filesystem::path& dir) {
  std::string all;
  for (auto name : {bundle_files::kVocab, bundle_files::kMerges, bundle_files::kAdded, bundle_files::kCandidates,
                    bundle_files::kEmbeddings, bundle_files::kManifest})
    all += read_file(dir / name) + "\x1F";
  return all;
}

TEST(Pipeline, SelectionMatchesOracle) {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (auto mode : {ProbabilityMode::conditional, ProbabilityMode::marginal}) {
      Scenario s(seed);
      s.cfg.selection.mode = mode;
      auto r = run_pipeline(s.cfg);
      auto want = s.expected();
      ASSERT_FALSE(want.empty());
      ASSERT_EQ(r.selection.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(r.selection[i].seq.surface, want[i].surface);
        EXPECT_NEAR(r.selection[i].score, want[i].score, 1e-12 * std::max(1.0, std::fabs(want[i].score)));
      }
      EXPECT_EQ(r.bundle.added_surfaces.size(), want.size());
    }
  }
}

TEST(Pipeline, MeanInitSkipsStaticStages) {
  Scenario s(4);
  auto r = run_pipeline(s.cfg);
  for (const auto& st : r.stages) EXPECT_FALSE(st.starts_with("static")) << st;
  EXPECT_NE(std::find(r.stages.begin(), r.stages.end(), "init-mean"), r.stages.end());
  auto tok = s.spec.build();
  ContextualInputEmbeddings c{load_word2vec_text(s.dir / "emb.txt"), "toy"};
  for (const auto& cand : r.selection)
    EXPECT_EQ(vec(*r.bundle.embeddings.find(cand.seq.surface)), mean_init(cand.seq, tok, c));
  EXPECT_EQ(r.bundle.manifest["embeddings"]["method"], "mean");
}

TEST(Pipeline, RerunIsByteIdentical) {
  Scenario s(5);
  run_pipeline(s.cfg);
  auto first = bundle_bytes(s.cfg.out_dir);
  s.cfg.threads = 1;
  run_pipeline(s.cfg);
  EXPECT_EQ(bundle_bytes(s.cfg.out_dir), first);
}

TEST(Pipeline, CacheHitsMatchRecompute) {
  Scenario s(6);
  s.cfg.init = InitMethod::proj;
  auto fresh = run_pipeline(s.cfg);
  auto fresh_bytes = bundle_bytes(s.cfg.out_dir);
  EXPECT_TRUE(fresh.cache_hits.empty());

  s.cfg.cache_dir = s.dir / "cache";
  auto cold = run_pipeline(s.cfg);
  EXPECT_TRUE(cold.cache_hits.empty());
  EXPECT_EQ(bundle_bytes(s.cfg.out_dir), fresh_bytes);
  auto warm = run_pipeline(s.cfg);
  EXPECT_EQ(warm.cache_hits, (std::vector<std::string>{"count-base", "count-domain", "sequences-base",
                                                       "sequences-domain", "static-base", "static-domain"}));
  EXPECT_EQ(bundle_bytes(s.cfg.out_dir), fresh_bytes);
}

TEST(Pipeline, CountsFileInputMatchesRawText) {
  Scenario s(7);
  auto raw = run_pipeline(s.cfg);
  testing::write_text(s.dir / "base.counts.tsv", write_counts_tsv(count_unigrams(s.base_text, CorpusId::base)));
  testing::write_text(s.dir / "domain.counts.tsv",
                      write_counts_tsv(count_unigrams(s.domain_text, CorpusId::domain)));
  s.cfg.base = {{}, s.dir / "base.counts.tsv"};
  s.cfg.domain = {{}, s.dir / "domain.counts.tsv"};
  auto from_counts = run_pipeline(s.cfg);
  EXPECT_EQ(from_counts.selection, raw.selection);
  EXPECT_EQ(from_counts.bundle.embeddings, raw.bundle.embeddings);
}

TEST(Pipeline, ProjectionInitWithFallback) {
  Scenario s(8);
  s.cfg.init = InitMethod::proj;
  // Domain static table without the first selected surface forces a mean fallback.
  auto probe = run_pipeline(s.cfg);
  ASSERT_FALSE(probe.selection.empty());
  auto tok = s.spec.build();
  auto aug = tok.add_tokens(std::span<const std::string>(probe.bundle.added_surfaces));
  auto x_domain = train_sgns(TokenizedCorpus({s.dir / "domain.txt"}, aug), s.cfg.sgns);
  EmbeddingMatrix trimmed(x_domain.dim());
  const auto& dropped = probe.selection.front().seq.surface;
  for (std::size_t i = 0; i < x_domain.size(); ++i)
    if (x_domain.keys()[i] != dropped) trimmed.add(x_domain.keys()[i], x_domain.row(i));
  testing::write_text(s.dir / "x_domain.txt", write_word2vec_text(trimmed));
  s.cfg.x_domain = s.dir / "x_domain.txt";

  auto r = run_pipeline(s.cfg);
  EXPECT_EQ(r.bundle.manifest["embeddings"]["fallback_to_mean"], Manifest::array({dropped}));
  ContextualInputEmbeddings c{load_word2vec_text(s.dir / "emb.txt"), "toy"};
  EXPECT_EQ(vec(*r.bundle.embeddings.find(dropped)), mean_init(probe.selection.front().seq, tok, c));
  EXPECT_EQ(r.bundle.embeddings.size(), r.selection.size());
  EXPECT_NE(std::find(r.stages.begin(), r.stages.end(), "fit-projection"), r.stages.end());
}

TEST(Pipeline, ErrorsCarryStageAndCategory) {
  Scenario s(9);
  auto cfg = s.cfg;
  cfg.base.paths = {(s.dir / "missing-*.txt").string()};
  try {
    run_pipeline(cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_TRUE(std::string(e.what()).starts_with("stage count-base: ")) << e.what();
  }
  cfg = s.cfg;
  cfg.base_embeddings.reset();
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
  cfg = s.cfg;
  cfg.selection.max_len = 1;
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
  cfg = s.cfg;
  testing::write_text(s.dir / "short.txt", "1 8\nab 1 2 3\n");
  cfg.base_embeddings = s.dir / "short.txt";
  EXPECT_THROW(run_pipeline(cfg), DataError);
  EXPECT_FALSE(std::filesystem::exists(cfg.out_dir));
}

TEST(Pipeline, ExhaustionIsRecorded) {
  Scenario s(10);
  s.cfg.selection.eta = 100000;
  auto r = run_pipeline(s.cfg);
  EXPECT_LT(r.selection.size(), 100000u);
  EXPECT_EQ(r.bundle.manifest["counts"]["exhausted"], true);
  EXPECT_EQ(r.bundle.manifest["counts"]["selected"], r.selection.size());
}

TEST(MeasureCompression, AugmentationNeverIncreasesTokens) {
  Scenario s(11);
  auto r = run_pipeline(s.cfg);
  auto tok = s.spec.build();
  auto aug = tok.add_tokens(std::span<const std::string>(r.bundle.added_surfaces));
  auto stats = measure_compression(count_unigrams(s.domain_text, CorpusId::domain), tok, aug);
  EXPECT_EQ(stats.words, 4000u);
  EXPECT_LT(stats.augmented_tokens, stats.base_tokens);
}

}  // namespace
}  // namespace adaptok
