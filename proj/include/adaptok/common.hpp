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

#ifndef ADAPTOK_COMMON_HPP
#define ADAPTOK_COMMON_HPP

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace adaptok {

inline constexpr std::string_view kVersion = "0.3.0";

/// Bad flags, inconsistent inputs, mismatched tokenizers. CLI exit code 2.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed data files. CLI exit code 3.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

using TokenId = std::int32_t;

/// Worker count: ADAPTOK_THREADS if set, else hardware concurrency.
inline unsigned default_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ADAPTOK_THREADS")) {
    unsigned cap = 0;
    auto [p, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), cap);
    if (ec == std::errc() && cap > 0) return cap;
  }
  return hw;
}

/// FNV-1a, 64 bit. Incremental so large files can be streamed.
class Digest {
 public:
  void update(std::string_view data) {
    for (unsigned char c : data) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string digest_hex(std::string_view data) {
  Digest d;
  d.update(data);
  return d.hex();
}

/// Reads a whole file; transparently inflates gzip input.
inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() < 2 || static_cast<unsigned char>(raw[0]) != 0x1f ||
      static_cast<unsigned char>(raw[1]) != 0x8b)
    return raw;

  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (!gz) throw DataError("cannot open gzip " + path.string());
  std::string out;
  std::vector<char> buf(1 << 16);
  int n;
  while ((n = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()))) > 0)
    out.append(buf.data(), static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = gzerror(gz, &err);
  std::string what = msg ? msg : "";
  gzclose(gz);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
    throw DataError("corrupt gzip " + path.string() + ": " + what);
  return out;
}

/// Streams a file (gzip inflated) in blocks that end on line boundaries.
/// fn(std::string_view block) is called with each block; the last may lack a '\n'.
template <typename Fn>
void for_each_block(const std::filesystem::path& path, Fn&& fn, std::size_t block_bytes = 64u << 20) {
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (!gz) throw DataError("cannot open " + path.string());
  gzbuffer(gz, 1u << 20);
  std::string buf;
  std::string carry;
  while (true) {
    buf.assign(carry);
    std::size_t have = buf.size();
    buf.resize(std::max(block_bytes, have + (1u << 16)));
    int n = gzread(gz, buf.data() + have, static_cast<unsigned>(buf.size() - have));
    if (n < 0) {
      int err = 0;
      std::string what = gzerror(gz, &err);
      gzclose(gz);
      throw DataError("read error " + path.string() + ": " + what);
    }
    buf.resize(have + static_cast<std::size_t>(n));
    if (n == 0) {
      if (!buf.empty()) fn(std::string_view(buf));
      break;
    }
    auto cut = buf.rfind('\n');
    if (cut == std::string::npos) {
      carry.swap(buf);
      continue;
    }
    carry.assign(buf, cut + 1);
    buf.resize(cut + 1);
    fn(std::string_view(buf));
  }
  gzclose(gz);
}

/// Writes via a sibling temp file and rename, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void append_float(std::string& out, float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  out.append(buf, p);
}

inline void append_double(std::string& out, double v, int precision = 17) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
  out.append(buf, p);
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw DataError("bad " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Calls fn(line) for each '\n'-terminated line; strips a trailing '\r'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line);
    start = end + 1;
  }
}

}  // namespace adaptok

#endif  // ADAPTOK_COMMON_HPP
