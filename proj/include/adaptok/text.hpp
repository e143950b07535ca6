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

#ifndef ADAPTOK_TEXT_HPP
#define ADAPTOK_TEXT_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace adaptok::text {

inline constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

/// Length of the well-formed UTF-8 sequence starting at s[i], or 0 if ill-formed.
/// Sets cp to the decoded code point.
inline std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
  auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = b(i);
  if (c < 0x80) {
    cp = c;
    return 1;
  }
  std::size_t len;
  char32_t min;
  if ((c & 0xE0) == 0xC0) {
    len = 2, cp = c & 0x1F, min = 0x80;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3, cp = c & 0x0F, min = 0x800;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4, cp = c & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((b(i + k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b(i + k) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

/// Unicode White_Space property.
constexpr bool is_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

/// Splits text into maximal runs of non-whitespace and calls fn(word) for each.
/// Ill-formed UTF-8 bytes are replaced by U+FFFD; each replacement bumps `invalid`.
/// No case folding, no punctuation splitting.
template <typename Fn>
void for_each_word(std::string_view s, Fn&& fn, std::size_t& invalid) {
  std::size_t i = 0;
  std::size_t word_start = std::string_view::npos;
  bool dirty = false;
  std::string repaired;

  auto flush = [&](std::size_t end) {
    if (word_start == std::string_view::npos) return;
    if (!dirty) {
      fn(s.substr(word_start, end - word_start));
    } else {
      repaired.clear();
      std::size_t k = word_start;
      while (k < end) {
        char32_t cp;
        std::size_t n = decode_utf8(s, k, cp);
        if (n == 0 || k + n > end) {
          repaired += kReplacement;
          k += 1;
        } else {
          repaired.append(s.substr(k, n));
          k += n;
        }
      }
      fn(std::string_view(repaired));
    }
    word_start = std::string_view::npos;
    dirty = false;
  };

  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      if (c == ' ' || (c >= 0x09 && c <= 0x0D)) {
        flush(i);
      } else if (word_start == std::string_view::npos) {
        word_start = i;
      }
      ++i;
      continue;
    }
    char32_t cp;
    std::size_t n = decode_utf8(s, i, cp);
    if (n == 0) {
      ++invalid;
      dirty = true;
      if (word_start == std::string_view::npos) word_start = i;
      ++i;
      continue;
    }
    if (is_space(cp)) {
      flush(i);
    } else if (word_start == std::string_view::npos) {
      word_start = i;
    }
    i += n;
  }
  flush(s.size());
}

template <typename Fn>
void for_each_word(std::string_view s, Fn&& fn) {
  std::size_t ignored = 0;
  for_each_word(s, std::forward<Fn>(fn), ignored);
}

}  // namespace adaptok::text

#endif  // ADAPTOK_TEXT_HPP
