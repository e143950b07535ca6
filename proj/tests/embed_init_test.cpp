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

#include <random>

#include "test_support.hpp"

namespace adaptok {
namespace {

EmbeddingMatrix table(std::size_t dim, std::initializer_list<std::pair<const char*, std::vector<float>>> rows) {
  EmbeddingMatrix m(dim);
  for (const auto& [k, v] : rows) m.add(k, v);
  return m;
}

// Random matrices with named rows t0..t{n-1}.
EmbeddingMatrix random_table(std::mt19937_64& rng, std::size_t n, std::size_t dim, double sd = 1.0) {
  std::normal_distribution<double> g(0, sd);
  EmbeddingMatrix m(dim);
  std::vector<float> v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : v) x = static_cast<float>(g(rng));
    m.add("t" + std::to_string(i), v);
  }
  return m;
}

EmbeddingMatrix times(const EmbeddingMatrix& x, const Eigen::MatrixXd& a, std::mt19937_64* rng = nullptr,
                      double noise = 0) {
  std::normal_distribution<double> g(0, noise);
  EmbeddingMatrix out(static_cast<std::size_t>(a.cols()));
  std::vector<float> v(out.dim());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < x.dim(); ++k) s += double(x.row(i)[k]) * a(Eigen::Index(k), Eigen::Index(j));
      v[j] = static_cast<float>(s + (rng ? g(*rng) : 0.0));
    }
    out.add(x.keys()[i], v);
  }
  return out;
}

TEST(MeanInit, TwoRows) {
  auto e = table(2, {{"x", {1, 0}}, {"y", {0, 1}}});
  std::vector<std::string> seq{"x", "y"};
  EXPECT_EQ(mean_init(seq, e), (std::vector<float>{0.5f, 0.5f}));
}

TEST(MeanInit, SingleTokenIsIdentity) {
  auto e = table(3, {{"x", {0.1f, -7.25f, 3e-8f}}});
  std::vector<std::string> seq{"x"};
  auto v = mean_init(seq, e);
  EXPECT_EQ(v, (std::vector<float>{0.1f, -7.25f, 3e-8f}));
}

TEST(MeanInit, RepeatedTokenIsIdentity) {
  auto e = table(2, {{"x", {0.3f, 1.7f}}});
  std::vector<std::string> seq{"x", "x", "x"};
  EXPECT_EQ(mean_init(seq, e), (std::vector<float>{0.3f, 1.7f}));
}

TEST(MeanInit, Errors) {
  auto e = table(2, {{"x", {1, 0}}});
  std::vector<std::string> missing{"x", "z"};
  EXPECT_THROW(mean_init(missing, e), DataError);
  EXPECT_THROW(mean_init(std::span<const std::string>{}, e), std::invalid_argument);
}

TEST(MeanInit, ThroughTokenizerMatchesNaiveAverage) {
  std::mt19937_64 rng(3);
  auto tok = testing::random_toy_tokenizer(rng, "abcdef", 30).build();
  ContextualInputEmbeddings emb{testing::random_embeddings(rng, tok, 24), "toy"};
  EXPECT_TRUE(emb.missing(tok).empty());
  for (const auto& w : testing::random_lexicon(rng, "abcdef", 200, 2, 12)) {
    auto seq = tok.encode_word(w);
    auto got = mean_init(seq, tok, emb);
    for (std::size_t k = 0; k < 24; ++k) {
      double s = 0;
      for (auto id : seq.ids) s += (*emb.table.find(tok.token(id)))[k];
      ASSERT_NEAR(got[k], s / double(seq.size()), 1e-6);
    }
  }
}

TEST(ContextualInputEmbeddings, ReportsMissingRows) {
  auto tok = testing::char_tokenizer("abc").build();
  ContextualInputEmbeddings emb{table(1, {{"a", {1}}, {"c", {2}}}), "m"};
  EXPECT_EQ(emb.missing(tok), (std::vector<std::string>{"b"}));
}

TEST(FitProjection, IdentityWhenTablesAgree) {
  std::mt19937_64 rng(1);
  auto x = random_table(rng, 200, 8);
  auto m = fit_projection(x, x, FitMethod::closed_form, 0.0);
  EXPECT_LT((m.matrix - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(m.fit_rows, 200u);
}

TEST(FitProjection, RecoversScaling) {
  std::mt19937_64 rng(2);
  auto x = random_table(rng, 200, 6);
  Eigen::MatrixXd two = 2.0 * Eigen::MatrixXd::Identity(6, 6);
  auto m = fit_projection(x, times(x, two), FitMethod::closed_form, 0.0);
  EXPECT_LT((m.matrix - two).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitProjection, RectangularMapAndSharedRowsOnly) {
  std::mt19937_64 rng(3);
  auto x = random_table(rng, 300, 5);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 9);
  auto c = times(x, a);
  // Extra static rows not in c are ignored.
  auto x_more = x;
  std::vector<float> junk(5, 100.0f);
  x_more.add("only_static", junk);
  auto m = fit_projection(x_more, c, FitMethod::closed_form, 0.0);
  EXPECT_EQ(m.matrix.rows(), 5);
  EXPECT_EQ(m.matrix.cols(), 9);
  EXPECT_EQ(m.fit_rows, 300u);
  EXPECT_LT((m.matrix - a).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FitProjection, NormalEquationsHoldAndPerturbationsDoNotImprove) {
  std::mt19937_64 rng(4);
  auto x = random_table(rng, 400, 12);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(12, 10);
  auto c = times(x, a, &rng, 0.5);
  auto m = fit_projection(x, c, FitMethod::closed_form, 0.0);
  auto fs = fitting_set(x, c);
  Eigen::MatrixXd grad = fs.x.transpose() * (fs.x * m.matrix - fs.c);
  Eigen::MatrixXd xtc = fs.x.transpose() * fs.c;
  EXPECT_LE(grad.norm() / xtc.norm(), 1e-6);
  double best = (fs.x * m.matrix - fs.c).norm();
  EXPECT_NEAR(m.fit_residual, best, 1e-9 * best);
  std::normal_distribution<double> g(0, 1e-3);
  for (int i = 0; i < 50; ++i) {
    Eigen::MatrixXd delta = Eigen::MatrixXd::NullaryExpr(12, 10, [&] { return g(rng); });
    EXPECT_GE((fs.x * (m.matrix + delta) - fs.c).norm(), best);
  }
}

TEST(FitProjection, GradientDescentMatchesClosedForm) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_table(rng, 300, 16);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(16, 16);
    auto c = times(x, a, &rng, 0.3);
    auto closed = fit_projection(x, c, FitMethod::closed_form, 1e-6);
    auto gd = fit_projection(x, c, FitMethod::gradient_descent, 1e-6);
    EXPECT_LE(gd.fit_residual, 1.05 * closed.fit_residual);
    EXPECT_GT(gd.iterations, 0u);
    EXPECT_LT((gd.matrix - closed.matrix).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(FitProjection, RankDeficientNeedsRidge) {
  // Two static dims are copies of each other.
  EmbeddingMatrix x(2), c(1);
  for (int i = 0; i < 10; ++i) {
    std::vector<float> v{float(i), float(i)}, w{float(2 * i)};
    x.add("t" + std::to_string(i), v);
    c.add("t" + std::to_string(i), w);
  }
  EXPECT_THROW(fit_projection(x, c, FitMethod::closed_form, 0.0), ConfigError);
  auto m = fit_projection(x, c, FitMethod::closed_form, 1e-6);
  EXPECT_NEAR(m.matrix(0, 0), 1.0, 1e-4);
  EXPECT_NEAR(m.matrix(1, 0), 1.0, 1e-4);
  EXPECT_THROW(fit_projection(x, c, FitMethod::closed_form, -1.0), ConfigError);
}

TEST(FitProjection, NoSharedTokensIsDataError) {
  auto x = table(1, {{"a", {1}}});
  auto c = table(1, {{"b", {1}}});
  EXPECT_THROW(fit_projection(x, c, FitMethod::closed_form), DataError);
}

TEST(ParseFitMethod, Aliases) {
  EXPECT_EQ(parse_fit_method("closed"), FitMethod::closed_form);
  EXPECT_EQ(parse_fit_method("sgd"), FitMethod::gradient_descent);
  EXPECT_THROW(parse_fit_method("newton"), ConfigError);
}

TEST(ProjectInit, MultipliesRowByMap) {
  std::mt19937_64 rng(6);
  auto x = random_table(rng, 50, 4);
  auto c = times(x, Eigen::MatrixXd::Random(4, 3), &rng, 0.1);
  auto map = fit_projection(x, c, FitMethod::closed_form);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto got = *project_init(x.keys()[i], x, map);
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += double(x.row(i)[k]) * map.matrix(Eigen::Index(k), Eigen::Index(j));
      EXPECT_NEAR(got[j], s, 1e-5 * std::max(1.0, std::fabs(s)));
    }
  }
}

TEST(ProjectInit, MissingSurfaceAndDimMismatch) {
  std::mt19937_64 rng(7);
  auto x = random_table(rng, 20, 4);
  auto map = fit_projection(x, x, FitMethod::closed_form);
  EXPECT_FALSE(project_init("absent", x, map).has_value());
  auto wrong = random_table(rng, 5, 3);
  EXPECT_THROW(project_init("t0", wrong, map), ConfigError);
}

}  // namespace
}  // namespace adaptok
