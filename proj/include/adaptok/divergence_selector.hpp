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

#ifndef ADAPTOK_DIVERGENCE_SELECTOR_HPP
#define ADAPTOK_DIVERGENCE_SELECTOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/sequence_model.hpp"

namespace adaptok {

struct AugmentationCandidate {
  SubwordSequence seq;
  double p_domain = 0;
  double p_base = 0;
  double score = 0;  // nats
  std::uint64_t domain_count = 0;
  std::uint64_t base_count = 0;

  bool operator==(const AugmentationCandidate&) const = default;
};

struct SelectionConfig {
  std::size_t eta = 10000;
  std::uint64_t f_min = 20;
  std::size_t max_len = 10;
  ProbabilityMode mode = ProbabilityMode::conditional;
  bool require_both = true;

  void validate() const {
    if (eta < 1) throw ConfigError("eta must be >= 1");
    if (f_min < 1) throw ConfigError("f_min must be >= 1");
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
  }
};

/// p * ln(p / q) for p, q in (0, 1].
inline double pointwise_kl(double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw std::domain_error("pointwise_kl: probabilities must be > 0");
  // log1p near p == q.
  double r = (p - q) / q;
  double log_ratio = std::fabs(r) < 0.5 ? std::log1p(r) : std::log(p / q);
  return p * log_ratio;
}

/// Total ranking order: score descending, then shorter, then surface, then ids.
inline bool ranks_before(const AugmentationCandidate& a, const AugmentationCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.seq.size() != b.seq.size()) return a.seq.size() < b.seq.size();
  if (a.seq.surface != b.seq.surface) return a.seq.surface < b.seq.surface;
  return a.seq.ids < b.seq.ids;
}

/// Scores every sequence of length >= 2 present in both tables by
/// R(s) = p_domain * ln(p_domain / p_base). Output is in ranking order.
inline std::vector<AugmentationCandidate> score_candidates(const SequenceDistribution& domain,
                                                           const SequenceDistribution& base,
                                                           const BpeTokenizer& tok, ProbabilityMode mode,
                                                           unsigned threads = 1) {
  if (domain.tokenizer_digest != base.tokenizer_digest)
    throw ConfigError("score_candidates: domain and base tables come from different tokenizers");
  if (!domain.tokenizer_digest.empty() && domain.tokenizer_digest != tok.digest())
    throw ConfigError("score_candidates: tables were built with a different tokenizer");
  if (domain.lambda != base.lambda) throw ConfigError("score_candidates: lambda differs between tables");

  const bool domain_smaller = domain.counts.size() <= base.counts.size();
  const auto& probe = domain_smaller ? domain : base;
  const auto& other = domain_smaller ? base : domain;

  std::vector<const SequenceKey*> shared;
  for (const auto& [key, count] : probe.counts)
    if (key.size() >= 2 && other.counts.contains(key)) shared.push_back(&key);

  std::vector<AugmentationCandidate> out(shared.size());
  auto score_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const SequenceKey& key = *shared[i];
      auto& c = out[i];
      c.seq = tok.make_sequence(key);
      c.domain_count = domain.counts.at(key);
      c.base_count = base.counts.at(key);
      c.p_domain = *phrase_probability(domain, key, mode);
      c.p_base = *phrase_probability(base, key, mode);
      c.score = pointwise_kl(c.p_domain, c.p_base);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(shared.size() / 1024 + 1)));
  if (threads == 1) {
    score_range(0, shared.size());
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t)
      workers.emplace_back(score_range, shared.size() * t / threads, shared.size() * (t + 1) / threads);
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

/// Walks candidates in ranking order and keeps those passing the length and frequency
/// filters whose surface is neither a vocab token nor already kept; stops at eta.
inline std::vector<AugmentationCandidate> select_augmentations(std::span<const AugmentationCandidate> candidates,
                                                               const SelectionConfig& cfg, const BpeTokenizer& tok) {
  cfg.validate();
  std::vector<const AugmentationCandidate*> order;
  order.reserve(candidates.size());
  for (const auto& c : candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return ranks_before(*a, *b); });

  std::vector<AugmentationCandidate> kept;
  StringSet seen;
  for (const auto* c : order) {
    if (kept.size() == cfg.eta) break;
    if (c->seq.size() < 2 || c->seq.size() > cfg.max_len) continue;
    if (c->domain_count < cfg.f_min) continue;
    if (cfg.require_both && c->base_count < cfg.f_min) continue;
    if (tok.contains(c->seq.surface) || seen.contains(c->seq.surface)) continue;
    seen.insert(c->seq.surface);
    kept.push_back(*c);
  }
  return kept;
}

/// candidates.tsv: header, then rank, surface, ids, score, p_domain, p_base,
/// domain_count, base_count. Rank is 1-based list position.
inline std::string write_candidates_tsv(std::span<const AugmentationCandidate> cands) {
  std::string out = "rank\tsurface\ttoken_ids\tscore\tp_domain\tp_base\tdomain_count\tbase_count\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    out += std::to_string(i + 1);
    out += '\t';
    out += c.seq.surface;
    out += '\t';
    for (std::size_t k = 0; k < c.seq.ids.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(c.seq.ids[k]);
    }
    out += '\t';
    append_double(out, c.score);
    out += '\t';
    append_double(out, c.p_domain);
    out += '\t';
    append_double(out, c.p_base);
    out += '\t';
    out += std::to_string(c.domain_count);
    out += '\t';
    out += std::to_string(c.base_count);
    out += '\n';
  }
  return out;
}

inline std::vector<AugmentationCandidate> parse_candidates_tsv(std::string_view content) {
  std::vector<AugmentationCandidate> out;
  std::size_t lineno = 0;
  for_each_line(content, [&](std::string_view line) {
    ++lineno;
    if (lineno == 1 || line.empty()) return;
    auto f = split(line, '\t');
    if (f.size() != 8) throw DataError("candidates.tsv:" + std::to_string(lineno) + ": expected 8 columns");
    AugmentationCandidate c;
    c.seq.surface = std::string(f[1]);
    for (auto id : split(f[2], ',')) c.seq.ids.push_back(parse_number<TokenId>(id, "token id"));
    c.score = parse_number<double>(f[3], "score");
    c.p_domain = parse_number<double>(f[4], "p_domain");
    c.p_base = parse_number<double>(f[5], "p_base");
    c.domain_count = parse_number<std::uint64_t>(f[6], "domain_count");
    c.base_count = parse_number<std::uint64_t>(f[7], "base_count");
    out.push_back(std::move(c));
  });
  return out;
}

}  // namespace adaptok

#endif  // ADAPTOK_DIVERGENCE_SELECTOR_HPP
