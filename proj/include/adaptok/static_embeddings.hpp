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

#ifndef ADAPTOK_STATIC_EMBEDDINGS_HPP
#define ADAPTOK_STATIC_EMBEDDINGS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/text.hpp"

namespace adaptok {

enum class Provenance { trained, ingested, computed };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::trained: return "trained";
    case Provenance::ingested: return "ingested";
    default: return "computed";
  }
}

/// Token-keyed dense float matrix; row order is insertion order.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(std::size_t dim = 0, Provenance provenance = Provenance::computed)
      : dim_(dim), provenance_(provenance) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  Provenance provenance() const { return provenance_; }
  const std::vector<std::string>& keys() const { return keys_; }
  std::span<const float> data() const { return data_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::optional<std::span<const float>> find(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return row(it->second);
  }
  bool contains(std::string_view token) const { return index_.contains(token); }

  void add(std::string token, std::span<const float> v) {
    if (v.size() != dim_)
      throw DataError("embedding row '" + token + "' has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(dim_));
    for (float x : v)
      if (!std::isfinite(x)) throw DataError("non-finite value in embedding row '" + token + "'");
    if (!index_.emplace(token, keys_.size()).second) throw DataError("duplicate embedding row '" + token + "'");
    keys_.push_back(std::move(token));
    data_.insert(data_.end(), v.begin(), v.end());
  }

  void reserve(std::size_t rows) {
    keys_.reserve(rows);
    data_.reserve(rows * dim_);
    index_.reserve(rows);
  }

  /// Same keys in the same order with identical values; provenance is metadata.
  bool operator==(const EmbeddingMatrix& o) const {
    return dim_ == o.dim_ && keys_ == o.keys_ && data_ == o.data_;
  }

 private:
  std::size_t dim_;
  Provenance provenance_;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  StringMap<std::size_t> index_;
};

/// word2vec text: "rows dim" then "token v1 ... vdim" per line, 9 significant digits.
inline std::string write_word2vec_text(const EmbeddingMatrix& m) {
  std::string out = std::to_string(m.size()) + " " + std::to_string(m.dim()) + "\n";
  out.reserve(out.size() + m.size() * (m.dim() * 13 + 16));
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.keys()[i];
    for (float x : m.row(i)) {
      out += ' ';
      append_float(out, x);
    }
    out += '\n';
  }
  return out;
}

inline EmbeddingMatrix parse_word2vec_text(std::string_view content, Provenance provenance = Provenance::ingested) {
  std::size_t lineno = 0;
  std::size_t rows = 0, dim = 0;
  EmbeddingMatrix m;
  std::vector<float> v;
  for_each_line(content, [&](std::string_view line) {
    ++lineno;
    if (lineno == 1) {
      auto f = split(line, ' ');
      if (f.size() != 2) throw DataError("word2vec: header must be 'rows dim'");
      rows = parse_number<std::size_t>(f[0], "row count");
      dim = parse_number<std::size_t>(f[1], "dim");
      if (dim == 0) throw DataError("word2vec: dim must be >= 1");
      m = EmbeddingMatrix(dim, provenance);
      m.reserve(rows);
      return;
    }
    if (line.empty()) return;
    if (m.size() == rows) throw DataError("word2vec: more rows than the declared " + std::to_string(rows));
    auto sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0) throw DataError("word2vec:" + std::to_string(lineno) + ": no values");
    v.clear();
    std::size_t pos = sp + 1;
    while (pos <= line.size()) {
      auto end = line.find(' ', pos);
      if (end == std::string_view::npos) end = line.size();
      if (end > pos) v.push_back(parse_number<float>(line.substr(pos, end - pos), "embedding value"));
      pos = end + 1;
    }
    m.add(std::string(line.substr(0, sp)), v);
  });
  if (lineno == 0) throw DataError("word2vec: empty file");
  if (m.size() != rows)
    throw DataError("word2vec: declared " + std::to_string(rows) + " rows, found " + std::to_string(m.size()));
  return m;
}

inline EmbeddingMatrix load_word2vec_text(const std::filesystem::path& path) {
  return parse_word2vec_text(read_file(path));
}

/// Token surfaces for one document line: whitespace words, each encoded bare with
/// the (possibly augmented) tokenizer.
inline std::vector<std::string> tokenize_for_static(std::string_view doc, const BpeTokenizer& tok) {
  std::vector<std::string> out;
  text::for_each_word(doc, [&](std::string_view w) {
    for (TokenId id : tok.encode_word(w).ids) out.push_back(tok.token(id));
  });
  return out;
}

/// In-memory sentence source.
struct SentenceList {
  std::vector<std::vector<std::string>> sentences;

  template <typename Fn>
  void for_each_sentence(Fn&& fn) const {
    for (const auto& s : sentences) fn(std::span<const std::string>(s));
  }
};

/// Re-iterable source over corpus files: every line is one sentence of token surfaces.
/// Word encodings are memoized per word type.
class TokenizedCorpus {
 public:
  TokenizedCorpus(std::vector<std::filesystem::path> files, const BpeTokenizer& tok)
      : files_(std::move(files)), tok_(&tok) {}

  template <typename Fn>
  void for_each_sentence(Fn&& fn) const {
    std::vector<std::string> sentence;
    for (const auto& f : files_)
      for_each_block(f, [&](std::string_view block) {
        for_each_line(block, [&](std::string_view line) {
          sentence.clear();
          text::for_each_word(line, [&](std::string_view w) {
            auto it = cache_.find(w);
            if (it == cache_.end()) {
              std::vector<std::string> pieces;
              for (TokenId id : tok_->encode_word(w).ids) pieces.push_back(tok_->token(id));
              it = cache_.emplace(std::string(w), std::move(pieces)).first;
            }
            sentence.insert(sentence.end(), it->second.begin(), it->second.end());
          });
          fn(std::span<const std::string>(sentence));
        });
      });
  }

 private:
  std::vector<std::filesystem::path> files_;
  const BpeTokenizer* tok_;
  mutable StringMap<std::vector<std::string>> cache_;
};

struct SgnsConfig {
  std::size_t dim = 768;
  std::size_t window = 5;
  std::uint64_t min_count = 100;
  std::size_t epochs = 2;
  double sample = 1e-5;
  std::size_t negatives = 5;
  double alpha = 0.025;
  double min_alpha = 1e-4;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  void validate() const {
    if (dim < 1) throw ConfigError("sgns: dim must be >= 1");
    if (window < 1) throw ConfigError("sgns: window must be >= 1");
    if (epochs < 1) throw ConfigError("sgns: epochs must be >= 1");
    if (negatives < 1) throw ConfigError("sgns: negatives must be >= 1");
    if (sample < 0) throw ConfigError("sgns: sample must be >= 0");
    if (workers < 1) throw ConfigError("sgns: workers must be >= 1");
  }
};

namespace detail {

/// word2vec's linear congruential generator.
struct Lcg {
  std::uint64_t state;
  std::uint64_t next() {
    state = state * 25214903917ULL + 11;
    return state;
  }
  /// Uniform in [0, 1) from 16 bits, as word2vec does.
  double uniform() { return static_cast<double>(next() & 0xFFFF) / 65536.0; }
};

inline float ld(float& x) { return std::atomic_ref<float>(x).load(std::memory_order_relaxed); }
inline void st(float& x, float v) { std::atomic_ref<float>(x).store(v, std::memory_order_relaxed); }

}  // namespace detail

/// Skip-gram with negative sampling. Returns the input-side vector of every token with
/// count >= min_count, ordered by descending count then token. With workers == 1 the
/// result is a pure function of (source, cfg). More workers update shared weights
/// without locks, so results then vary run to run.
template <typename Source>
EmbeddingMatrix train_sgns(const Source& source, const SgnsConfig& cfg) {
  cfg.validate();

  StringMap<std::uint64_t> raw;
  source.for_each_sentence([&](std::span<const std::string> s) {
    for (const auto& t : s) {
      auto it = raw.find(t);
      if (it == raw.end())
        raw.emplace(t, 1);
      else
        ++it->second;
    }
  });
  std::vector<std::pair<std::string, std::uint64_t>> vocab;
  for (auto& [t, c] : raw)
    if (c >= cfg.min_count) vocab.emplace_back(t, c);
  raw.clear();
  if (vocab.empty()) throw DataError("train_sgns: vocabulary is empty after min_count filtering");
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  const std::size_t V = vocab.size(), D = cfg.dim;
  StringMap<std::uint32_t> index;
  std::uint64_t train_words = 0;
  for (std::size_t i = 0; i < V; ++i) {
    index.emplace(vocab[i].first, static_cast<std::uint32_t>(i));
    train_words += vocab[i].second;
  }

  // Keep probability per token (gensim's formula); 1.0 disables downsampling.
  std::vector<double> keep(V, 1.0);
  if (cfg.sample > 0) {
    double threshold = cfg.sample * static_cast<double>(train_words);
    for (std::size_t i = 0; i < V; ++i) {
      double c = static_cast<double>(vocab[i].second);
      keep[i] = std::min(1.0, (std::sqrt(c / threshold) + 1.0) * threshold / c);
    }
  }

  // Negative sampling table, unigram^0.75.
  const std::size_t table_size = std::clamp<std::size_t>(V * 100, 1'000'000, 100'000'000);
  std::vector<std::uint32_t> table(table_size);
  {
    double norm = 0;
    for (const auto& [t, c] : vocab) norm += std::pow(static_cast<double>(c), 0.75);
    std::size_t w = 0;
    double cum = std::pow(static_cast<double>(vocab[0].second), 0.75) / norm;
    for (std::size_t a = 0; a < table_size; ++a) {
      table[a] = static_cast<std::uint32_t>(w);
      if (static_cast<double>(a) / static_cast<double>(table_size) > cum && w + 1 < V) {
        ++w;
        cum += std::pow(static_cast<double>(vocab[w].second), 0.75) / norm;
      }
    }
  }

  std::vector<float> syn0(V * D), syn1(V * D, 0.0f);
  {
    detail::Lcg rng{cfg.seed};
    for (auto& x : syn0) x = static_cast<float>((rng.uniform() - 0.5) / static_cast<double>(D));
  }

  // Sentences as vocab indices, so epochs do not rehash strings.
  std::vector<std::uint32_t> corpus;
  std::vector<std::size_t> bounds{0};
  source.for_each_sentence([&](std::span<const std::string> s) {
    for (const auto& t : s) {
      auto it = index.find(t);
      if (it != index.end()) corpus.push_back(it->second);
    }
    if (corpus.size() != bounds.back()) bounds.push_back(corpus.size());
  });
  const std::size_t n_sent = bounds.size() - 1;
  const double total = static_cast<double>(cfg.epochs) * static_cast<double>(corpus.size());
  std::atomic<std::uint64_t> processed{0};

  auto train_part = [&](unsigned worker) {
    detail::Lcg rng{cfg.seed + 1 + worker};
    std::vector<float> grad(D);
    std::vector<std::uint32_t> sent;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::size_t lo = n_sent * worker / cfg.workers, hi = n_sent * (worker + 1) / cfg.workers;
      for (std::size_t s = lo; s < hi; ++s) {
        std::size_t len = bounds[s + 1] - bounds[s];
        double progress = static_cast<double>(processed.fetch_add(len, std::memory_order_relaxed)) / total;
        float alpha = static_cast<float>(std::max(cfg.min_alpha, cfg.alpha - (cfg.alpha - cfg.min_alpha) * progress));
        sent.clear();
        for (std::size_t k = bounds[s]; k < bounds[s + 1]; ++k) {
          std::uint32_t w = corpus[k];
          if (keep[w] < 1.0 && keep[w] < rng.uniform()) continue;
          sent.push_back(w);
        }
        for (std::size_t pos = 0; pos < sent.size(); ++pos) {
          std::size_t b = rng.next() % cfg.window;
          std::size_t reach = cfg.window - b;
          std::size_t first = pos >= reach ? pos - reach : 0;
          std::size_t last = std::min(sent.size() - 1, pos + reach);
          for (std::size_t c = first; c <= last; ++c) {
            if (c == pos) continue;
            float* l1 = &syn0[static_cast<std::size_t>(sent[c]) * D];
            std::fill(grad.begin(), grad.end(), 0.0f);
            for (std::size_t d = 0; d <= cfg.negatives; ++d) {
              std::uint32_t target;
              float label;
              if (d == 0) {
                target = sent[pos];
                label = 1.0f;
              } else {
                target = table[(rng.next() >> 16) % table_size];
                if (target == sent[pos]) continue;
                label = 0.0f;
              }
              float* l2 = &syn1[static_cast<std::size_t>(target) * D];
              float f = 0.0f;
              for (std::size_t k = 0; k < D; ++k) f += detail::ld(l1[k]) * detail::ld(l2[k]);
              float g = (label - 1.0f / (1.0f + std::exp(-f))) * alpha;
              for (std::size_t k = 0; k < D; ++k) {
                grad[k] += g * detail::ld(l2[k]);
                detail::st(l2[k], detail::ld(l2[k]) + g * detail::ld(l1[k]));
              }
            }
            for (std::size_t k = 0; k < D; ++k) detail::st(l1[k], detail::ld(l1[k]) + grad[k]);
          }
        }
      }
    }
  };

  if (cfg.workers == 1) {
    train_part(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < cfg.workers; ++w) pool.emplace_back(train_part, w);
  }

  EmbeddingMatrix out(D, Provenance::trained);
  out.reserve(V);
  for (std::size_t i = 0; i < V; ++i) out.add(vocab[i].first, std::span<const float>(&syn0[i * D], D));
  return out;
}

}  // namespace adaptok

#endif  // ADAPTOK_STATIC_EMBEDDINGS_HPP
