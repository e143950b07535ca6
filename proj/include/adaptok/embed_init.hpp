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

#ifndef ADAPTOK_EMBED_INIT_HPP
#define ADAPTOK_EMBED_INIT_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/static_embeddings.hpp"

namespace adaptok {

/// The language model's input embedding table, keyed by vocab string.
struct ContextualInputEmbeddings {
  EmbeddingMatrix table;
  std::string source_model_id;

  std::size_t dim() const { return table.dim(); }

  /// Vocab tokens with no row; empty when the table covers the base vocabulary.
  std::vector<std::string> missing(const BpeTokenizer& tok) const {
    std::vector<std::string> out;
    for (std::size_t id = 0; id < tok.base_size(); ++id)
      if (!table.contains(tok.token(static_cast<TokenId>(id)))) out.push_back(tok.token(static_cast<TokenId>(id)));
    return out;
  }
};

/// Component-wise mean of the rows for `subtokens`.
inline std::vector<float> mean_init(std::span<const std::string> subtokens, const EmbeddingMatrix& emb) {
  if (subtokens.empty()) throw std::invalid_argument("mean_init: empty sequence");
  std::vector<double> acc(emb.dim(), 0.0);
  for (const auto& t : subtokens) {
    auto row = emb.find(t);
    if (!row) throw DataError("mean_init: no embedding for subtoken '" + t + "'");
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += (*row)[k];
  }
  std::vector<float> out(acc.size());
  const double n = static_cast<double>(subtokens.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / n);
  return out;
}

inline std::vector<float> mean_init(const SubwordSequence& seq, const BpeTokenizer& tok,
                                    const ContextualInputEmbeddings& emb) {
  std::vector<std::string> parts;
  parts.reserve(seq.ids.size());
  for (TokenId id : seq.ids) parts.push_back(tok.token(id));
  return mean_init(parts, emb.table);
}

enum class FitMethod { closed_form, gradient_descent };

inline std::string_view to_string(FitMethod m) {
  return m == FitMethod::closed_form ? "closed_form" : "gradient_descent";
}

inline FitMethod parse_fit_method(std::string_view s) {
  if (s == "closed" || s == "closed_form") return FitMethod::closed_form;
  if (s == "sgd" || s == "gd" || s == "gradient_descent") return FitMethod::gradient_descent;
  throw ConfigError("unknown fit method '" + std::string(s) + "'");
}

/// Linear map from static space to contextual input space; token vectors are rows,
/// so a contextual estimate is x * matrix.
struct ProjectionMap {
  Eigen::MatrixXd matrix;
  FitMethod fit_method = FitMethod::closed_form;
  double ridge = 0;
  double fit_residual = 0;  // ||X M - C||_F over the fitting set
  std::size_t fit_rows = 0;
  std::size_t iterations = 0;
};

/// Fitting rows: tokens present in both tables, in lexicographic order.
struct FittingSet {
  std::vector<std::string> tokens;
  Eigen::MatrixXd x;
  Eigen::MatrixXd c;
};

inline FittingSet fitting_set(const EmbeddingMatrix& x_base, const EmbeddingMatrix& c_base) {
  FittingSet fs;
  for (const auto& k : x_base.keys())
    if (c_base.contains(k)) fs.tokens.push_back(k);
  std::sort(fs.tokens.begin(), fs.tokens.end());
  const auto n = static_cast<Eigen::Index>(fs.tokens.size());
  fs.x.resize(n, static_cast<Eigen::Index>(x_base.dim()));
  fs.c.resize(n, static_cast<Eigen::Index>(c_base.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto xr = *x_base.find(fs.tokens[static_cast<std::size_t>(i)]);
    auto cr = *c_base.find(fs.tokens[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < fs.x.cols(); ++k) fs.x(i, k) = xr[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < fs.c.cols(); ++k) fs.c(i, k) = cr[static_cast<std::size_t>(k)];
  }
  return fs;
}

struct GradientDescentOptions {
  double tolerance = 1e-10;  // on ||grad||_F / ||X^T C||_F
  std::size_t max_iterations = 200000;
};

/// Minimizes ||X M - C||_F^2 + ridge ||M||_F^2 over rows shared by x_base and c_base.
///
/// closed_form solves the ridge-augmented least squares system [X; sqrt(ridge) I] M = [C; 0]
/// by column-pivoted QR. gradient_descent runs Nesterov-accelerated full-batch gradient
/// descent with step 1/L from M = 0.
inline ProjectionMap fit_projection(const EmbeddingMatrix& x_base, const EmbeddingMatrix& c_base, FitMethod method,
                                    double ridge = 1e-6, GradientDescentOptions gd = {}) {
  if (ridge < 0) throw ConfigError("fit_projection: ridge must be >= 0");
  FittingSet fs = fitting_set(x_base, c_base);
  if (fs.tokens.empty()) throw DataError("fit_projection: no tokens shared by static and contextual tables");
  const Eigen::Index n = fs.x.rows(), ds = fs.x.cols();

  ProjectionMap map;
  map.fit_method = method;
  map.ridge = ridge;
  map.fit_rows = fs.tokens.size();

  if (method == FitMethod::closed_form) {
    Eigen::MatrixXd a(n + (ridge > 0 ? ds : 0), ds);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(a.rows(), fs.c.cols());
    a.topRows(n) = fs.x;
    b.topRows(n) = fs.c;
    if (ridge > 0) a.bottomRows(ds) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(ds, ds);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < ds)
      throw ConfigError("fit_projection: static embeddings are rank deficient on the fitting set (rank " +
                        std::to_string(qr.rank()) + " < " + std::to_string(ds) + "); use ridge > 0");
    map.matrix = qr.solve(b);
  } else {
    Eigen::MatrixXd gram = fs.x.transpose() * fs.x;
    gram.diagonal().array() += ridge;
    const Eigen::MatrixXd rhs = fs.x.transpose() * fs.c;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmax > 0)) throw ConfigError("fit_projection: static embeddings are all zero; use ridge > 0");
    const double scale = std::max(rhs.norm(), 1e-300);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ds, fs.c.cols());
    Eigen::MatrixXd prev = m, y = m;
    double t = 1.0;
    std::size_t it = 0;
    for (; it < gd.max_iterations; ++it) {
      Eigen::MatrixXd grad = gram * y - rhs;
      if (it % 8 == 0 && (gram * m - rhs).norm() <= gd.tolerance * scale) break;
      prev = m;
      m = y - grad / lmax;
      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = m + ((t - 1.0) / t_next) * (m - prev);
      // Restart momentum when the objective direction turns uphill.
      if ((grad.array() * (m - prev).array()).sum() > 0) {
        y = m;
        t_next = 1.0;
      }
      t = t_next;
    }
    map.matrix = std::move(m);
    map.iterations = it;
  }
  map.fit_residual = (fs.x * map.matrix - fs.c).norm();
  return map;
}

/// x_domain[surface] * M, or nullopt when the surface has no static vector.
inline std::optional<std::vector<float>> project_init(std::string_view surface, const EmbeddingMatrix& x_domain,
                                                      const ProjectionMap& map) {
  if (static_cast<Eigen::Index>(x_domain.dim()) != map.matrix.rows())
    throw ConfigError("project_init: static dim " + std::to_string(x_domain.dim()) + " does not match map rows " +
                      std::to_string(map.matrix.rows()));
  auto row = x_domain.find(surface);
  if (!row) return std::nullopt;
  Eigen::RowVectorXd x(map.matrix.rows());
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = (*row)[static_cast<std::size_t>(k)];
  Eigen::RowVectorXd y = x * map.matrix;
  std::vector<float> out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index k = 0; k < y.size(); ++k) out[static_cast<std::size_t>(k)] = static_cast<float>(y(k));
  return out;
}

}  // namespace adaptok

#endif  // ADAPTOK_EMBED_INIT_HPP
