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

#ifndef ADAPTOK_ARTIFACT_IO_HPP
#define ADAPTOK_ARTIFACT_IO_HPP

#include <unistd.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/common.hpp"
#include "adaptok/divergence_selector.hpp"
#include "adaptok/static_embeddings.hpp"

namespace adaptok {

using Manifest = nlohmann::ordered_json;

/// File names inside a bundle directory.
namespace bundle_files {
inline constexpr const char* kVocab = "vocab.json";
inline constexpr const char* kMerges = "merges.txt";
inline constexpr const char* kAdded = "added_tokens.txt";
inline constexpr const char* kCandidates = "candidates.tsv";
inline constexpr const char* kEmbeddings = "new_token_embeddings.txt";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace bundle_files

struct AugmentationBundle {
  std::vector<std::string> added_surfaces;
  EmbeddingMatrix embeddings;
  Manifest manifest;

  bool operator==(const AugmentationBundle& o) const {
    return added_surfaces == o.added_surfaces && embeddings == o.embeddings && manifest == o.manifest;
  }
};

inline std::string added_tokens_txt(std::span<const std::string> surfaces) {
  std::string out;
  for (const auto& s : surfaces) {
    out += s;
    out += '\n';
  }
  return out;
}

namespace detail {

/// Writes files into a scratch directory next to `dir`, then swaps it into place.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.filename().empty()) dir_ = dir_.parent_path();
    tmp_ = dir_;
    tmp_ += ".staging-" + std::to_string(::getpid());
    std::filesystem::remove_all(tmp_);
    std::filesystem::create_directories(tmp_);
  }
  ~StagedDirectory() {
    std::error_code ec;
    if (!committed_) std::filesystem::remove_all(tmp_, ec);
  }
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  void write(const char* name, std::string_view content) {
    std::ofstream out(tmp_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (tmp_ / name).string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write " + (tmp_ / name).string());
  }

  void commit() {
    auto old = dir_;
    old += ".old-" + std::to_string(::getpid());
    bool had_old = std::filesystem::exists(dir_);
    if (had_old) std::filesystem::rename(dir_, old);
    std::filesystem::rename(tmp_, dir_);
    committed_ = true;
    if (had_old) std::filesystem::remove_all(old);
  }

 private:
  std::filesystem::path dir_;
  std::filesystem::path tmp_;
  bool committed_ = false;
};

}  // namespace detail

/// Writes the augmented tokenizer, the selection, the new embedding rows, and the
/// manifest to out_dir, all or nothing. Token ids follow selection order. `manifest`
/// carries caller-provided configuration; the size fields are filled in here.
inline AugmentationBundle emit_bundle(const BpeTokenizer& tok, std::span<const AugmentationCandidate> selection,
                                      const EmbeddingMatrix& vectors, const std::filesystem::path& out_dir,
                                      Manifest manifest = Manifest::object()) {
  AugmentationBundle bundle;
  bundle.added_surfaces.reserve(selection.size());
  for (const auto& c : selection) bundle.added_surfaces.push_back(c.seq.surface);
  BpeTokenizer augmented = tok.add_tokens(std::span<const std::string>(bundle.added_surfaces));

  bundle.embeddings = EmbeddingMatrix(vectors.dim(), Provenance::computed);
  bundle.embeddings.reserve(selection.size());
  for (const auto& s : bundle.added_surfaces) {
    auto row = vectors.find(s);
    if (!row) throw DataError("emit_bundle: no embedding row for '" + s + "'");
    bundle.embeddings.add(s, *row);
  }

  const std::size_t dim = selection.empty() ? vectors.dim() : bundle.embeddings.dim();
  manifest["tool"] = "adaptok";
  manifest["version"] = std::string(kVersion);
  manifest["base_vocab_size"] = tok.base_size();
  manifest["added_count"] = bundle.added_surfaces.size();
  manifest["augmented_vocab_size"] = augmented.size();
  manifest["embedding_dim"] = dim;
  manifest["parameter_delta"] = bundle.added_surfaces.size() * dim;
  manifest["tokenizer_digest"] = tok.digest();
  manifest["augmented_tokenizer_digest"] = augmented.digest();
  bundle.manifest = std::move(manifest);

  detail::StagedDirectory stage(out_dir);
  stage.write(bundle_files::kVocab, augmented.vocab_json());
  stage.write(bundle_files::kMerges, augmented.merges_txt());
  stage.write(bundle_files::kAdded, added_tokens_txt(bundle.added_surfaces));
  stage.write(bundle_files::kCandidates, write_candidates_tsv(selection));
  stage.write(bundle_files::kEmbeddings, write_word2vec_text(bundle.embeddings));
  stage.write(bundle_files::kManifest, bundle.manifest.dump(2) + "\n");
  stage.commit();
  return bundle;
}

inline AugmentationBundle read_bundle(const std::filesystem::path& dir) {
  AugmentationBundle bundle;
  for_each_line(read_file(dir / bundle_files::kAdded), [&](std::string_view line) {
    if (!line.empty()) bundle.added_surfaces.emplace_back(line);
  });
  bundle.embeddings = load_word2vec_text(dir / bundle_files::kEmbeddings);
  try {
    bundle.manifest = Manifest::parse(read_file(dir / bundle_files::kManifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  if (bundle.embeddings.keys() != bundle.added_surfaces)
    throw DataError("bundle: embedding rows do not match added_tokens.txt");
  return bundle;
}

}  // namespace adaptok

#endif  // ADAPTOK_ARTIFACT_IO_HPP
