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

#ifndef ADAPTOK_CORPUS_STATS_HPP
#define ADAPTOK_CORPUS_STATS_HPP

#include <glob.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/text.hpp"

namespace adaptok {

enum class CorpusId { base, domain };

inline std::string_view to_string(CorpusId c) { return c == CorpusId::base ? "base" : "domain"; }

inline CorpusId parse_corpus_id(std::string_view s) {
  if (s == "base") return CorpusId::base;
  if (s == "domain") return CorpusId::domain;
  throw DataError("unknown corpus id '" + std::string(s) + "'");
}

/// Word-type counts for one corpus. total_tokens counts every word occurrence seen,
/// including types later dropped by a min_count filter.
struct UnigramTable {
  StringMap<std::uint64_t> counts;
  std::uint64_t total_tokens = 0;
  CorpusId corpus = CorpusId::domain;
  std::uint64_t invalid_utf8 = 0;

  /// (word, count) sorted by descending count, then lexicographically.
  std::vector<std::pair<std::string, std::uint64_t>> sorted() const {
    std::vector<std::pair<std::string, std::uint64_t>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
  }

  bool operator==(const UnigramTable& o) const {
    return total_tokens == o.total_tokens && corpus == o.corpus && counts == o.counts;
  }
};

namespace detail {

inline void count_into(std::string_view text, UnigramTable& table) {
  std::size_t invalid = 0;
  text::for_each_word(
      text,
      [&](std::string_view w) {
        ++table.total_tokens;
        auto it = table.counts.find(w);
        if (it != table.counts.end())
          ++it->second;
        else
          table.counts.emplace(std::string(w), 1);
      },
      invalid);
  table.invalid_utf8 += invalid;
}

inline void add_into(UnigramTable& into, const UnigramTable& part) {
  into.total_tokens += part.total_tokens;
  into.invalid_utf8 += part.invalid_utf8;
  for (const auto& [w, c] : part.counts) {
    auto it = into.counts.find(w);
    if (it != into.counts.end())
      it->second += c;
    else
      into.counts.emplace(w, c);
  }
}

/// Cuts text into at most n pieces at line boundaries.
inline std::vector<std::string_view> line_chunks(std::string_view text, unsigned n) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (unsigned k = 1; k <= n && start < text.size(); ++k) {
    std::size_t end = k == n ? text.size() : std::max(start, text.size() * k / n);
    if (end < text.size()) {
      auto nl = text.find('\n', end);
      end = nl == std::string_view::npos ? text.size() : nl + 1;
    }
    if (end > start) out.push_back(text.substr(start, end - start));
    start = end;
  }
  return out;
}

}  // namespace detail

/// Drops types with count < min_count; total_tokens is left untouched.
inline void apply_min_count(UnigramTable& table, std::uint64_t min_count) {
  if (min_count <= 1) return;
  std::erase_if(table.counts, [&](const auto& kv) { return kv.second < min_count; });
}

/// Pointwise sum. All parts must describe the same corpus.
inline UnigramTable merge_tables(std::span<const UnigramTable> parts) {
  UnigramTable out;
  if (parts.empty()) return out;
  out.corpus = parts.front().corpus;
  for (const auto& p : parts) {
    if (p.corpus != out.corpus) throw ConfigError("merge_tables: mixed corpus ids");
    detail::add_into(out, p);
  }
  return out;
}

/// Whitespace word counts of an in-memory text, fanned out over `threads` line-aligned
/// chunks. The result is identical for every thread count.
inline UnigramTable count_unigrams(std::string_view text, CorpusId corpus, std::uint64_t min_count = 1,
                                   unsigned threads = 1) {
  auto chunks = detail::line_chunks(text, std::max(1u, threads));
  std::vector<UnigramTable> parts(chunks.size());
  for (auto& p : parts) p.corpus = corpus;
  if (parts.size() <= 1) {
    if (!chunks.empty()) detail::count_into(chunks[0], parts[0]);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < chunks.size(); ++i)
      workers.emplace_back([&, i] { detail::count_into(chunks[i], parts[i]); });
  }
  UnigramTable out = parts.empty() ? UnigramTable{} : merge_tables(parts);
  out.corpus = corpus;
  apply_min_count(out, min_count);
  return out;
}

/// Streams files block by block; each block is counted with `threads` workers.
inline UnigramTable count_unigrams_files(std::span<const std::filesystem::path> files, CorpusId corpus,
                                         std::uint64_t min_count = 1, unsigned threads = 1) {
  UnigramTable out;
  out.corpus = corpus;
  for (const auto& f : files)
    for_each_block(f, [&](std::string_view block) {
      detail::add_into(out, count_unigrams(block, corpus, 1, threads));
    });
  apply_min_count(out, min_count);
  return out;
}

/// Expands a path, directory, or glob pattern into a sorted list of regular files.
inline std::vector<std::filesystem::path> expand_corpus_paths(const std::string& spec) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  if (fs::is_directory(spec)) {
    for (const auto& e : fs::recursive_directory_iterator(spec))
      if (e.is_regular_file()) out.push_back(e.path());
  } else if (fs::exists(spec)) {
    out.emplace_back(spec);
  } else {
    glob_t g{};
    if (::glob(spec.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i)
        if (fs::is_regular_file(g.gl_pathv[i])) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  if (out.empty()) throw DataError("no corpus files match '" + spec + "'");
  std::sort(out.begin(), out.end());
  return out;
}

/// Content digest of a set of files, independent of their paths.
inline std::string digest_files(std::span<const std::filesystem::path> files) {
  Digest d;
  for (const auto& f : files) {
    for_each_block(f, [&](std::string_view block) { d.update(block); });
    d.update("\x1e");
  }
  return d.hex();
}

/// TSV: "#total:<N>" header, then "word\tcount" by descending count, then word.
inline std::string write_counts_tsv(const UnigramTable& table) {
  std::string out = "#total:" + std::to_string(table.total_tokens) + "\n";
  for (const auto& [w, c] : table.sorted()) {
    out += w;
    out += '\t';
    out += std::to_string(c);
    out += '\n';
  }
  return out;
}

inline UnigramTable parse_counts_tsv(std::string_view content, CorpusId corpus) {
  UnigramTable table;
  table.corpus = corpus;
  bool header = false;
  std::size_t lineno = 0;
  for_each_line(content, [&](std::string_view line) {
    ++lineno;
    if (lineno == 1) {
      if (!line.starts_with("#total:")) throw DataError("counts.tsv: missing #total header");
      table.total_tokens = parse_number<std::uint64_t>(line.substr(7), "total");
      header = true;
      return;
    }
    if (line.empty()) return;
    auto tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw DataError("counts.tsv:" + std::to_string(lineno) + ": expected 'word\\tcount'");
    auto c = parse_number<std::uint64_t>(line.substr(tab + 1), "count");
    if (c == 0) throw DataError("counts.tsv:" + std::to_string(lineno) + ": zero count");
    if (!table.counts.emplace(std::string(line.substr(0, tab)), c).second)
      throw DataError("counts.tsv:" + std::to_string(lineno) + ": duplicate word");
  });
  if (!header) throw DataError("counts.tsv: empty file");
  return table;
}

inline UnigramTable load_counts_tsv(const std::filesystem::path& path, CorpusId corpus) {
  return parse_counts_tsv(read_file(path), corpus);
}

}  // namespace adaptok

#endif  // ADAPTOK_CORPUS_STATS_HPP
