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
#include <sys/wait.h>

#include <cstdlib>
#include <random>

#include "test_support.hpp"

namespace adaptok {
namespace {

class Cli : public ::testing::Test {
 protected:
  testing::TempDir dir;
  std::string T;  // tokenizer dir

  void SetUp() override {
    std::mt19937_64 rng(17);
    auto spec = testing::random_toy_tokenizer(rng, "abcdefg", 24);
    auto lex_d = testing::random_lexicon(rng, "abcdefg", 80, 2, 10);
    auto lex_b = testing::random_lexicon(rng, "abcdefg", 80, 2, 10);
    lex_b.insert(lex_b.begin() + 10, lex_d.begin() + 5, lex_d.begin() + 40);
    testing::write_text(dir / "domain.txt", testing::zipf_corpus(rng, lex_d, 4000));
    testing::write_text(dir / "base.txt", testing::zipf_corpus(rng, lex_b, 4000));
    testing::write_tokenizer_dir(dir / "tok", spec);
    testing::write_text(dir / "emb.txt", write_word2vec_text(testing::random_embeddings(rng, spec.build(), 8)));
    T = (dir / "tok").string();
  }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  // Exit code of `adaptok args`; stdout goes to out.txt, stderr to err.txt.
  int run(const std::string& args, const std::string& env = "") const {
    std::string cmd = env + " '" + std::string(ADAPTOK_CLI_PATH) + "' " + args + " >'" + p("out.txt") + "' 2>'" +
                      p("err.txt") + "'";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out() const { return read_file(dir / "out.txt"); }
  std::string err() const { return read_file(dir / "err.txt"); }
};

TEST_F(Cli, StepwiseMatchesAugment) {
  ASSERT_EQ(run("count --corpus " + p("base.txt") + " --corpus-id base --out " + p("base.tsv")), 0) << err();
  ASSERT_EQ(run("count --corpus " + p("domain.txt") + " --out " + p("domain.tsv")), 0) << err();
  ASSERT_EQ(run("score --base-counts " + p("base.tsv") + " --domain-counts " + p("domain.tsv") + " --tokenizer-dir " +
                T + " --out " + p("cands.tsv")),
            0)
      << err();
  ASSERT_EQ(run("select --candidates " + p("cands.tsv") + " --tokenizer-dir " + T +
                " --eta 5 --f-min 3 --out " + p("sel.tsv")),
            0)
      << err();
  ASSERT_EQ(run("init-embed --selection " + p("sel.tsv") + " --tokenizer-dir " + T + " --base-embeddings " +
                p("emb.txt") + " --out " + p("new.txt") + " --emit " + p("step")),
            0)
      << err();
  ASSERT_EQ(run("augment --base-corpus " + p("base.txt") + " --domain-corpus " + p("domain.txt") +
                " --tokenizer-dir " + T + " --base-embeddings " + p("emb.txt") + " --eta 5 --f-min 3 --out " +
                p("bundle")),
            0)
      << err();

  auto step = read_bundle(dir / "step");
  auto full = read_bundle(dir / "bundle");
  EXPECT_EQ(step.added_surfaces.size(), 5u);
  EXPECT_EQ(step.added_surfaces, full.added_surfaces);
  EXPECT_EQ(step.embeddings, full.embeddings);
  EXPECT_EQ(load_word2vec_text(dir / "new.txt"), full.embeddings);
  EXPECT_EQ(read_file(dir / "sel.tsv"), read_file(dir / "bundle" / bundle_files::kCandidates));
  EXPECT_EQ(read_file(dir / "step" / bundle_files::kVocab), read_file(dir / "bundle" / bundle_files::kVocab));
}

TEST_F(Cli, AugmentWithPrecomputedCountsAndCache) {
  ASSERT_EQ(run("count --corpus " + p("base.txt") + " --corpus-id base --out " + p("base.tsv")), 0);
  std::string common = " --domain-corpus " + p("domain.txt") + " --tokenizer-dir " + T + " --base-embeddings " +
                       p("emb.txt") + " --eta 5 --f-min 3 --cache-dir " + p("cache");
  ASSERT_EQ(run("augment --base-counts " + p("base.tsv") + common + " --out " + p("a")), 0) << err();
  ASSERT_EQ(run("augment --base-counts " + p("base.tsv") + common + " --out " + p("b")), 0) << err();
  EXPECT_NE(err().find("from cache"), std::string::npos) << err();
  for (auto f : {bundle_files::kVocab, bundle_files::kCandidates, bundle_files::kEmbeddings, bundle_files::kManifest})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
}

TEST_F(Cli, ProjectionPathAndTrainStatic) {
  ASSERT_EQ(run("augment --base-corpus " + p("base.txt") + " --domain-corpus " + p("domain.txt") +
                " --tokenizer-dir " + T + " --base-embeddings " + p("emb.txt") +
                " --eta 5 --f-min 3 --method proj --static-dim 6 --static-min-count 1 --static-sample 0 --out " +
                p("bundle")),
            0)
      << err();
  auto b = read_bundle(dir / "bundle");
  EXPECT_EQ(b.manifest["embeddings"]["method"], "proj");
  EXPECT_EQ(b.manifest["config"]["sgns"]["dim"], 6);

  ASSERT_EQ(run("train-static --corpus " + p("domain.txt") + " --tokenizer-dir " + p("bundle") +
                " --dim 4 --min-count 1 --sample 0 --epochs 1 --out " + p("x.txt")),
            0)
      << err();
  auto x = load_word2vec_text(dir / "x.txt");
  EXPECT_EQ(x.dim(), 4u);
  for (const auto& s : b.added_surfaces) EXPECT_TRUE(x.contains(s)) << s;
}

TEST_F(Cli, StatsReportsCompression) {
  ASSERT_EQ(run("augment --base-corpus " + p("base.txt") + " --domain-corpus " + p("domain.txt") +
                " --tokenizer-dir " + T + " --base-embeddings " + p("emb.txt") + " --eta 5 --f-min 3 --out " +
                p("bundle")),
            0);
  ASSERT_EQ(run("stats --tokenizer-dir " + T + " --bundle " + p("bundle") + " --corpus " + p("domain.txt")), 0)
      << err();
  auto j = nlohmann::json::parse(out());
  EXPECT_EQ(j["words"], 4000);
  EXPECT_EQ(j["added_tokens"], 5);
  EXPECT_LT(j["augmented_tokens_per_word"].get<double>(), j["base_tokens_per_word"].get<double>());
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("count --out " + p("x.tsv")), 2);  // missing --corpus
  EXPECT_EQ(run("frobnicate"), 2);
  ASSERT_EQ(run("count --corpus " + p("base.txt") + " --out " + p("base.tsv")), 0);
  EXPECT_EQ(run("score --base-counts " + p("base.tsv") + " --domain-counts " + p("base.tsv") + " --tokenizer-dir " +
                T + " --mode bogus --out " + p("c.tsv")),
            2);
  EXPECT_EQ(run("score --base-counts " + p("base.tsv") + " --domain-counts " + p("base.tsv") + " --tokenizer-dir " +
                T + " --lambda 0 --out " + p("c.tsv")),
            2);
  EXPECT_EQ(run("augment --base-corpus " + p("base.txt") + " --domain-corpus " + p("domain.txt") +
                " --tokenizer-dir " + T + " --base-embeddings " + p("emb.txt") + " --max-len 1 --out " + p("o")),
            2);
  EXPECT_NE(err().find("config error"), std::string::npos);
}

TEST_F(Cli, DataErrorsExitThree) {
  EXPECT_EQ(run("count --corpus " + p("nothing-*.txt") + " --out " + p("x.tsv")), 3);
  testing::write_text(dir / "bad.tsv", "#total:1\nab\tzz\n");
  EXPECT_EQ(run("score --base-counts " + p("bad.tsv") + " --domain-counts " + p("bad.tsv") + " --tokenizer-dir " + T +
                " --out " + p("c.tsv")),
            3);
  testing::write_text(dir / "bad_emb.txt", "3 8\na 1\n");
  EXPECT_EQ(run("augment --base-corpus " + p("base.txt") + " --domain-corpus " + p("domain.txt") +
                " --tokenizer-dir " + T + " --base-embeddings " + p("bad_emb.txt") + " --out " + p("o")),
            3);
  EXPECT_NE(err().find("data error: stage load-base-embeddings"), std::string::npos) << err();
  EXPECT_FALSE(std::filesystem::exists(dir / "o"));
}

TEST_F(Cli, ThreadCapFromEnvironmentGivesSameCounts) {
  ASSERT_EQ(run("count --corpus " + p("domain.txt") + " --out " + p("one.tsv"), "ADAPTOK_THREADS=1"), 0);
  ASSERT_EQ(run("--threads 8 count --corpus " + p("domain.txt") + " --out " + p("eight.tsv")), 0);
  EXPECT_EQ(read_file(dir / "one.tsv"), read_file(dir / "eight.tsv"));
}

TEST_F(Cli, VersionFlag) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_NE(out().find(std::string(kVersion)), std::string::npos);
}

}  // namespace
}  // namespace adaptok
