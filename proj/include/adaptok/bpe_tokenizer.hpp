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

#ifndef ADAPTOK_BPE_TOKENIZER_HPP
#define ADAPTOK_BPE_TOKENIZER_HPP

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adaptok/common.hpp"
#include "adaptok/text.hpp"

namespace adaptok {

/// Transparent hash so maps keyed by std::string accept string_view lookups.
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

template <typename V>
using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;
using StringSet = std::unordered_set<std::string, StringHash, std::equal_to<>>;

/// GPT-2 byte <-> printable unicode symbol bijection.
class ByteMap {
 public:
  static const ByteMap& gpt2() {
    static const ByteMap map;
    return map;
  }

  /// UTF-8 encoding of the symbol for one byte.
  std::string_view symbol(unsigned char b) const { return symbols_[b]; }

  std::string encode(std::string_view bytes) const {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) out += symbols_[b];
    return out;
  }

  /// Inverse of encode; nullopt if `symbols` contains a code point outside the map.
  std::optional<std::string> decode(std::string_view symbols) const {
    std::string out;
    out.reserve(symbols.size());
    std::size_t i = 0;
    while (i < symbols.size()) {
      char32_t cp;
      std::size_t n = text::decode_utf8(symbols, i, cp);
      if (n == 0 || cp >= inverse_.size() || inverse_[cp] < 0) return std::nullopt;
      out += static_cast<char>(inverse_[cp]);
      i += n;
    }
    return out;
  }

  /// Splits byte-mapped text into its per-byte symbols.
  std::vector<std::string_view> split_symbols(std::string_view symbols) const {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < symbols.size()) {
      char32_t cp;
      std::size_t n = text::decode_utf8(symbols, i, cp);
      if (n == 0) n = 1;
      out.push_back(symbols.substr(i, n));
      i += n;
    }
    return out;
  }

 private:
  ByteMap() {
    inverse_.fill(-1);
    std::array<bool, 256> printable{};
    for (int b = '!'; b <= '~'; ++b) printable[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) printable[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) printable[b] = true;
    int next = 0;
    for (int b = 0; b < 256; ++b) {
      char32_t cp = printable[b] ? static_cast<char32_t>(b) : static_cast<char32_t>(256 + next++);
      symbols_[b] = utf8(cp);
      inverse_[cp] = static_cast<std::int16_t>(b);
    }
  }

  static std::string utf8(char32_t cp) {
    std::string s;
    if (cp < 0x80) {
      s += static_cast<char>(cp);
    } else {
      s += static_cast<char>(0xC0 | (cp >> 6));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return s;
  }

  std::array<std::string, 256> symbols_;
  std::array<std::int16_t, 512> inverse_;
};

/// An ordered run of token ids inside one word, with its vocab-string surface.
struct SubwordSequence {
  std::vector<TokenId> ids;
  std::string surface;

  std::size_t size() const { return ids.size(); }
  bool operator==(const SubwordSequence&) const = default;
};

/// Byte-level BPE of the GPT-2 / RoBERTa family, plus an ordered set of added tokens.
///
/// Immutable after construction; add_tokens returns a new tokenizer. Added tokens are
/// whole surfaces built from >= 2 base tokens. Encoding runs base BPE first and then
/// replaces, leftmost-longest, any run of consecutive base tokens whose concatenated
/// surface is an added token. Every replacement shortens the encoding, so an augmented
/// tokenizer never produces more tokens than its base.
class BpeTokenizer {
 public:
  BpeTokenizer() = default;

  /// Builds from an id-ordered vocabulary and a rank-ordered merge list.
  BpeTokenizer(std::vector<std::string> id_to_token,
               std::vector<std::pair<std::string, std::string>> merges)
      : id_to_token_(std::move(id_to_token)) {
    Digest digest;
    for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
      auto [it, fresh] = token_to_id_.emplace(id_to_token_[id], static_cast<TokenId>(id));
      if (!fresh) throw DataError("duplicate vocab entry '" + id_to_token_[id] + "'");
      digest.update(id_to_token_[id]);
      digest.update(std::string_view("\n", 1));
    }
    base_size_ = id_to_token_.size();
    digest.update("\x01merges\x01");
    merges_.reserve(merges.size());
    for (std::size_t rank = 0; rank < merges.size(); ++rank) {
      const auto& [left, right] = merges[rank];
      std::string joined = left + right;
      auto result = token_to_id_.find(joined);
      if (result == token_to_id_.end())
        throw DataError("merge result '" + joined + "' (rank " + std::to_string(rank) +
                        ") not in vocab");
      digest.update(left);
      digest.update(" ");
      digest.update(right);
      digest.update("\n");
      auto l = token_to_id_.find(left);
      auto r = token_to_id_.find(right);
      // Parts outside the vocab can never be formed, so the merge is unreachable.
      if (l == token_to_id_.end() || r == token_to_id_.end()) continue;
      merges_.emplace(pair_key(l->second, r->second),
                      MergeInfo{static_cast<std::uint32_t>(rank), result->second});
    }
    merge_list_ = std::move(merges);
    digest_ = digest.hex();
  }

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t base_size() const { return base_size_; }
  std::size_t merge_count() const { return merge_list_.size(); }
  std::size_t added_count() const { return id_to_token_.size() - base_size_; }

  /// Digest of the base vocabulary and merges; added tokens are excluded.
  const std::string& base_digest() const { return digest_; }

  /// Digest covering the base tables and any added tokens.
  std::string digest() const {
    if (added_count() == 0) return digest_;
    Digest d;
    d.update(digest_);
    for (const auto& s : added_tokens()) {
      d.update("\n");
      d.update(s);
    }
    return d.hex();
  }

  const std::string& token(TokenId id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::optional<TokenId> id(std::string_view token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view token) const { return token_to_id_.contains(token); }
  bool is_added(TokenId id) const { return static_cast<std::size_t>(id) >= base_size_; }

  std::span<const std::string> added_tokens() const {
    return std::span<const std::string>(id_to_token_).subspan(base_size_);
  }

  /// Encodes one whitespace-free word. With leading_space the space marker is prefixed.
  SubwordSequence encode_word(std::string_view word, bool leading_space = false) const {
    if (word.empty()) throw std::invalid_argument("encode_word: empty word");
    std::vector<TokenId> ids = bpe(word, leading_space);
    if (!added_.empty()) ids = apply_added(ids);
    return make_sequence(std::move(ids));
  }

  /// Base BPE only, ignoring added tokens.
  SubwordSequence encode_word_base(std::string_view word, bool leading_space = false) const {
    if (word.empty()) throw std::invalid_argument("encode_word: empty word");
    return make_sequence(bpe(word, leading_space));
  }

  SubwordSequence make_sequence(std::vector<TokenId> ids) const {
    SubwordSequence seq;
    for (TokenId t : ids) seq.surface += token(t);
    seq.ids = std::move(ids);
    return seq;
  }

  /// Raw bytes for a run of ids.
  std::string decode(std::span<const TokenId> ids) const {
    std::string symbols;
    for (TokenId t : ids) symbols += token(t);
    auto bytes = ByteMap::gpt2().decode(symbols);
    if (!bytes) throw DataError("decode: token outside the byte map");
    return *bytes;
  }

  /// New tokenizer with `surfaces` appended in input order (ids size()..size()+n-1).
  BpeTokenizer add_tokens(std::span<const std::string> surfaces) const {
    BpeTokenizer out = *this;
    StringSet seen;
    for (const auto& s : surfaces) {
      if (s.empty()) throw ConfigError("add_tokens: empty surface");
      if (!seen.insert(s).second) throw ConfigError("add_tokens: duplicate surface '" + s + "'");
      if (contains(s)) throw ConfigError("add_tokens: '" + s + "' already in vocab");
      if (!ByteMap::gpt2().decode(s))
        throw ConfigError("add_tokens: '" + s + "' is not a byte-mapped string");
    }
    for (const auto& s : surfaces) {
      auto id = static_cast<TokenId>(out.id_to_token_.size());
      out.id_to_token_.push_back(s);
      out.token_to_id_.emplace(s, id);
      out.added_.emplace(s, id);
      out.max_added_bytes_ = std::max(out.max_added_bytes_, s.size());
    }
    return out;
  }

  BpeTokenizer add_tokens(std::initializer_list<std::string> surfaces) const {
    std::vector<std::string> v(surfaces);
    return add_tokens(std::span<const std::string>(v));
  }

  /// vocab.json content: token -> id, in id order.
  std::string vocab_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t id = 0; id < id_to_token_.size(); ++id) j[id_to_token_[id]] = id;
    return j.dump() + "\n";
  }

  /// merges.txt content: the merge list as loaded, with a version comment line.
  std::string merges_txt() const {
    std::string out = "#version: 0.2\n";
    for (const auto& [left, right] : merge_list_) {
      out += left;
      out += ' ';
      out += right;
      out += '\n';
    }
    return out;
  }

 private:
  struct MergeInfo {
    std::uint32_t rank;
    TokenId result;
  };

  static std::uint64_t pair_key(TokenId l, TokenId r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) |
           static_cast<std::uint32_t>(r);
  }

  std::vector<TokenId> bpe(std::string_view word, bool leading_space) const {
    const auto& bm = ByteMap::gpt2();
    std::vector<TokenId> parts;
    parts.reserve(word.size() + 1);
    auto push_byte = [&](unsigned char b) {
      auto it = token_to_id_.find(bm.symbol(b));
      if (it == token_to_id_.end())
        throw DataError("byte symbol '" + std::string(bm.symbol(b)) + "' missing from vocab");
      parts.push_back(it->second);
    };
    if (leading_space) push_byte(' ');
    for (unsigned char b : word) push_byte(b);

    // Lowest-rank pair first; all of its occurrences are merged left to right.
    while (parts.size() > 1) {
      std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
      std::uint64_t best_key = 0;
      TokenId merged = -1;
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        auto key = pair_key(parts[i], parts[i + 1]);
        auto it = merges_.find(key);
        if (it != merges_.end() && it->second.rank < best) {
          best = it->second.rank;
          best_key = key;
          merged = it->second.result;
        }
      }
      if (merged < 0) break;
      auto left = static_cast<TokenId>(best_key >> 32);
      auto right = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
      std::size_t w = 0;
      for (std::size_t i = 0; i < parts.size();) {
        if (i + 1 < parts.size() && parts[i] == left && parts[i + 1] == right) {
          parts[w++] = merged;
          i += 2;
        } else {
          parts[w++] = parts[i++];
        }
      }
      parts.resize(w);
    }
    return parts;
  }

  std::vector<TokenId> apply_added(const std::vector<TokenId>& ids) const {
    std::vector<TokenId> out;
    out.reserve(ids.size());
    std::string run;
    for (std::size_t i = 0; i < ids.size();) {
      std::size_t best_end = 0;
      TokenId best_id = -1;
      run = token(ids[i]);
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        run += token(ids[j]);
        if (run.size() > max_added_bytes_) break;
        auto it = added_.find(run);
        if (it != added_.end()) {
          best_end = j + 1;
          best_id = it->second;
        }
      }
      if (best_end) {
        out.push_back(best_id);
        i = best_end;
      } else {
        out.push_back(ids[i++]);
      }
    }
    return out;
  }

  std::vector<std::string> id_to_token_;
  StringMap<TokenId> token_to_id_;
  std::unordered_map<std::uint64_t, MergeInfo> merges_;
  StringMap<TokenId> added_;
  std::size_t max_added_bytes_ = 0;
  std::size_t base_size_ = 0;
  std::vector<std::pair<std::string, std::string>> merge_list_;
  std::string digest_;
};

/// Parses vocab.json text (token -> id). Ids must be unique and dense in [0, V).
inline std::vector<std::string> parse_vocab_json(std::string_view content) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("vocab.json: ") + e.what());
  }
  if (!j.is_object()) throw DataError("vocab.json: expected an object");
  std::vector<std::string> id_to_token(j.size());
  std::vector<bool> filled(j.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer()) throw DataError("vocab.json: non-integer id for '" + it.key() + "'");
    auto id = it.value().get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token.size())
      throw DataError("vocab.json: ids not dense, got " + std::to_string(id));
    if (filled[static_cast<std::size_t>(id)]) throw DataError("vocab.json: duplicate id " + std::to_string(id));
    filled[static_cast<std::size_t>(id)] = true;
    id_to_token[static_cast<std::size_t>(id)] = it.key();
  }
  return id_to_token;
}

/// Parses merges.txt text: one "left right" pair per line; '#' lines are comments.
inline std::vector<std::pair<std::string, std::string>> parse_merges(std::string_view content) {
  std::vector<std::pair<std::string, std::string>> merges;
  std::size_t lineno = 0;
  for_each_line(content, [&](std::string_view line) {
    ++lineno;
    if (line.empty() || (line.front() == '#' && lineno == 1)) return;
    auto sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0 || sp + 1 == line.size() ||
        line.find(' ', sp + 1) != std::string_view::npos)
      throw DataError("merges.txt:" + std::to_string(lineno) + ": expected 'left right'");
    merges.emplace_back(std::string(line.substr(0, sp)), std::string(line.substr(sp + 1)));
  });
  return merges;
}

inline BpeTokenizer load_tokenizer(const std::filesystem::path& vocab_file,
                                   const std::filesystem::path& merges_file) {
  return BpeTokenizer(parse_vocab_json(read_file(vocab_file)), parse_merges(read_file(merges_file)));
}

/// Loads vocab.json + merges.txt from `dir`. When added_tokens.txt is present its
/// surfaces are the trailing ids of vocab.json and are treated as added tokens.
inline BpeTokenizer load_tokenizer_dir(const std::filesystem::path& dir) {
  auto id_to_token = parse_vocab_json(read_file(dir / "vocab.json"));
  auto merges = parse_merges(read_file(dir / "merges.txt"));
  auto added_path = dir / "added_tokens.txt";
  if (!std::filesystem::exists(added_path)) return BpeTokenizer(std::move(id_to_token), std::move(merges));

  std::vector<std::string> added;
  for_each_line(read_file(added_path), [&](std::string_view line) {
    if (!line.empty()) added.emplace_back(line);
  });
  if (added.size() > id_to_token.size()) throw DataError("added_tokens.txt larger than vocab");
  std::size_t base = id_to_token.size() - added.size();
  for (std::size_t i = 0; i < added.size(); ++i)
    if (id_to_token[base + i] != added[i])
      throw DataError("added token '" + added[i] + "' is not at id " + std::to_string(base + i));
  id_to_token.resize(base);
  return BpeTokenizer(std::move(id_to_token), std::move(merges)).add_tokens(std::span<const std::string>(added));
}

}  // namespace adaptok

#endif  // ADAPTOK_BPE_TOKENIZER_HPP
