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

#ifndef ADAPTOK_SEQUENCE_MODEL_HPP
#define ADAPTOK_SEQUENCE_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/corpus_stats.hpp"

namespace adaptok {

using SequenceKey = std::vector<TokenId>;

struct SequenceKeyHash {
  std::size_t operator()(const SequenceKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (TokenId t : k) {
      h ^= static_cast<std::uint32_t>(t);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

enum class ProbabilityMode { conditional, marginal };

inline std::string_view to_string(ProbabilityMode m) {
  return m == ProbabilityMode::conditional ? "conditional" : "marginal";
}

inline ProbabilityMode parse_probability_mode(std::string_view s) {
  if (s == "conditional") return ProbabilityMode::conditional;
  if (s == "marginal") return ProbabilityMode::marginal;
  throw ConfigError("unknown probability mode '" + std::string(s) + "'");
}

/// Counts of every word-internal subtoken prefix of length 1..lambda in one corpus.
///
/// Prefix-closed: a stored sequence of length n >= 2 always has its length n-1 prefix
/// stored with a count at least as large.
struct SequenceDistribution {
  std::unordered_map<SequenceKey, std::uint64_t, SequenceKeyHash> counts;
  std::uint64_t word_total = 0;
  CorpusId corpus = CorpusId::domain;
  int lambda = 10;
  std::string tokenizer_digest;

  std::optional<std::uint64_t> count(std::span<const TokenId> seq) const {
    auto it = counts.find(SequenceKey(seq.begin(), seq.end()));
    if (it == counts.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const SequenceDistribution&) const = default;
};

namespace detail {

inline void accumulate_prefixes(const SubwordSequence& seq, std::uint64_t count, int lambda,
                                SequenceDistribution& into) {
  std::size_t n = std::min(seq.ids.size(), static_cast<std::size_t>(lambda));
  SequenceKey key;
  key.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    key.push_back(seq.ids[i]);
    into.counts[key] += count;
  }
}

}  // namespace detail

/// Expands each word type into its subtoken prefixes: for (w, c) in unigrams and
/// i in 1..min(|Tok(w)|, lambda), T[Tok(w)[:i]] += c. Words are encoded without the
/// space marker. Word types are split over `threads` workers; the merged result
/// equals the serial one.
inline SequenceDistribution build_sequence_distribution(const UnigramTable& unigrams, const BpeTokenizer& tok,
                                                        int lambda, unsigned threads = 1) {
  if (lambda < 1) throw ConfigError("lambda must be >= 1");
  SequenceDistribution out;
  out.word_total = unigrams.total_tokens;
  out.corpus = unigrams.corpus;
  out.lambda = lambda;
  out.tokenizer_digest = tok.digest();

  std::vector<const std::pair<const std::string, std::uint64_t>*> entries;
  entries.reserve(unigrams.counts.size());
  for (const auto& kv : unigrams.counts) entries.push_back(&kv);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size() / 256 + 1)));
  if (threads == 1) {
    for (const auto* e : entries) detail::accumulate_prefixes(tok.encode_word(e->first), e->second, lambda, out);
    return out;
  }

  std::vector<SequenceDistribution> parts(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        std::size_t lo = entries.size() * t / threads, hi = entries.size() * (t + 1) / threads;
        for (std::size_t i = lo; i < hi; ++i)
          detail::accumulate_prefixes(tok.encode_word(entries[i]->first), entries[i]->second, lambda,
                                      parts[t]);
      });
    }
  }
  for (auto& p : parts)
    for (auto& [k, c] : p.counts) out.counts[k] += c;
  return out;
}

/// P(s) in the requested normalization, or nullopt when s is not in the table.
///
/// conditional: C_s / C_t with t the length |s|-1 prefix (t empty -> word_total).
/// marginal:    C_s / word_total.
inline std::optional<double> phrase_probability(const SequenceDistribution& dist, std::span<const TokenId> seq,
                                                ProbabilityMode mode) {
  if (seq.empty()) return std::nullopt;
  auto cs = dist.count(seq);
  if (!cs || dist.word_total == 0) return std::nullopt;
  if (mode == ProbabilityMode::marginal || seq.size() == 1)
    return static_cast<double>(*cs) / static_cast<double>(dist.word_total);
  auto ct = dist.count(seq.first(seq.size() - 1));
  if (!ct || *ct == 0) return std::nullopt;
  return static_cast<double>(*cs) / static_cast<double>(*ct);
}

/// TSV: "#corpus:<id> #total:<N> #lambda:<L> #tokenizer:<digest>" then "id,id,...\tcount",
/// rows ordered by id sequence.
inline std::string write_sequence_tsv(const SequenceDistribution& dist) {
  std::string out = "#corpus:" + std::string(to_string(dist.corpus)) + " #total:" + std::to_string(dist.word_total) +
                    " #lambda:" + std::to_string(dist.lambda) + " #tokenizer:" + dist.tokenizer_digest + "\n";
  std::vector<const std::pair<const SequenceKey, std::uint64_t>*> rows;
  rows.reserve(dist.counts.size());
  for (const auto& kv : dist.counts) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < r->first.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(r->first[i]);
    }
    out += '\t';
    out += std::to_string(r->second);
    out += '\n';
  }
  return out;
}

inline SequenceDistribution parse_sequence_tsv(std::string_view content) {
  SequenceDistribution dist;
  std::size_t lineno = 0;
  for_each_line(content, [&](std::string_view line) {
    ++lineno;
    if (lineno == 1) {
      bool seen_total = false;
      for (auto field : split(line, ' ')) {
        if (field.starts_with("#corpus:")) {
          dist.corpus = parse_corpus_id(field.substr(8));
        } else if (field.starts_with("#total:")) {
          dist.word_total = parse_number<std::uint64_t>(field.substr(7), "total");
          seen_total = true;
        } else if (field.starts_with("#lambda:")) {
          dist.lambda = parse_number<int>(field.substr(8), "lambda");
        } else if (field.starts_with("#tokenizer:")) {
          dist.tokenizer_digest = std::string(field.substr(11));
        } else {
          throw DataError("sequence tsv: unknown header field '" + std::string(field) + "'");
        }
      }
      if (!seen_total) throw DataError("sequence tsv: missing #total");
      return;
    }
    if (line.empty()) return;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw DataError("sequence tsv:" + std::to_string(lineno) + ": no tab");
    SequenceKey key;
    for (auto id : split(line.substr(0, tab), ',')) key.push_back(parse_number<TokenId>(id, "token id"));
    dist.counts[std::move(key)] = parse_number<std::uint64_t>(line.substr(tab + 1), "count");
  });
  if (lineno == 0) throw DataError("sequence tsv: empty file");
  return dist;
}

}  // namespace adaptok

#endif  // ADAPTOK_SEQUENCE_MODEL_HPP
