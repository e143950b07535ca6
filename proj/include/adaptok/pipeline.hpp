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

#ifndef ADAPTOK_PIPELINE_HPP
#define ADAPTOK_PIPELINE_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adaptok/artifact_io.hpp"
#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/corpus_stats.hpp"
#include "adaptok/divergence_selector.hpp"
#include "adaptok/embed_init.hpp"
#include "adaptok/sequence_model.hpp"
#include "adaptok/static_embeddings.hpp"

namespace adaptok {

enum class InitMethod { mean, proj };

inline std::string_view to_string(InitMethod m) { return m == InitMethod::mean ? "mean" : "proj"; }

inline InitMethod parse_init_method(std::string_view s) {
  if (s == "mean") return InitMethod::mean;
  if (s == "proj") return InitMethod::proj;
  throw ConfigError("unknown init method '" + std::string(s) + "'");
}

/// One corpus: raw text files (globs / directories) or a persisted counts.tsv.
struct CorpusInput {
  std::vector<std::string> paths;
  std::optional<std::filesystem::path> counts;
};

struct PipelineConfig {
  CorpusInput base;
  CorpusInput domain;
  std::filesystem::path tokenizer_dir;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> cache_dir;

  std::uint64_t word_min_count = 1;
  int lambda = 10;
  SelectionConfig selection;

  InitMethod init = InitMethod::mean;
  std::optional<std::filesystem::path> base_embeddings;
  std::string source_model_id = "roberta-base";
  std::optional<std::filesystem::path> x_base;
  std::optional<std::filesystem::path> x_domain;
  SgnsConfig sgns;
  FitMethod fit = FitMethod::closed_form;
  double ridge = 1e-6;

  unsigned threads = default_threads();
};

struct PipelineResult {
  AugmentationBundle bundle;
  std::vector<AugmentationCandidate> selection;
  std::vector<std::string> stages;      // stages executed, in order
  std::vector<std::string> cache_hits;  // stages served from cache_dir
};

/// Thrown when a pipeline stage fails; keeps the original error category.
template <typename Base>
class StageError : public Base {
 public:
  StageError(const std::string& stage, const std::string& what) : Base("stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

template <typename Fn>
auto run_stage(const std::string& name, std::vector<std::string>& log, Fn&& fn) {
  log.push_back(name);
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw StageError<ConfigError>(name, e.what());
  } catch (const DataError& e) {
    throw StageError<DataError>(name, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError<DataError>(name, e.what());
  }
}

inline Manifest sgns_json(const SgnsConfig& c) {
  Manifest j;
  j["dim"] = c.dim;
  j["window"] = c.window;
  j["min_count"] = c.min_count;
  j["epochs"] = c.epochs;
  j["sample"] = c.sample;
  j["negatives"] = c.negatives;
  j["alpha"] = c.alpha;
  j["min_alpha"] = c.min_alpha;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

struct CountedCorpus {
  UnigramTable table;
  std::string digest;
  std::vector<std::filesystem::path> files;
};

}  // namespace detail

/// Per-corpus compression: whitespace words and tokens under two tokenizers.
struct CompressionStats {
  std::uint64_t words = 0;
  std::uint64_t base_tokens = 0;
  std::uint64_t augmented_tokens = 0;

  double base_tokens_per_word() const { return words ? static_cast<double>(base_tokens) / words : 0.0; }
  double augmented_tokens_per_word() const { return words ? static_cast<double>(augmented_tokens) / words : 0.0; }
};

/// Token counts over a word table; each word type is encoded once.
inline CompressionStats measure_compression(const UnigramTable& words, const BpeTokenizer& base,
                                            const BpeTokenizer& augmented) {
  CompressionStats s;
  for (const auto& [w, c] : words.counts) {
    s.words += c;
    s.base_tokens += c * base.encode_word(w).size();
    s.augmented_tokens += c * augmented.encode_word(w).size();
  }
  return s;
}

/// count -> sequences -> score -> select -> [static] -> init -> emit.
///
/// Counts, sequence tables and trained static embeddings are cached in cache_dir keyed
/// by content digests of their inputs; the bundle does not depend on cache state.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  PipelineResult result;
  auto& log = result.stages;
  cfg.selection.validate();
  if (cfg.lambda < 1) throw ConfigError("lambda must be >= 1");
  if (!cfg.base_embeddings) throw ConfigError("embedding initialization needs the base model's input embeddings");
  if (cfg.cache_dir) fs::create_directories(*cfg.cache_dir);

  auto cached = [&](const std::string& stage, const std::string& file, auto&& compute, auto&& parse,
                    auto&& serialize) {
    if (cfg.cache_dir) {
      fs::path p = *cfg.cache_dir / file;
      if (fs::exists(p)) {
        result.cache_hits.push_back(stage);
        return parse(read_file(p));
      }
      auto value = compute();
      write_file_atomic(p, serialize(value));
      return value;
    }
    return compute();
  };

  const BpeTokenizer tok =
      detail::run_stage("load-tokenizer", log, [&] { return load_tokenizer_dir(cfg.tokenizer_dir); });
  if (tok.added_count() != 0) throw ConfigError("tokenizer_dir must hold a base tokenizer without added tokens");

  auto count = [&](const CorpusInput& in, CorpusId id) {
    return detail::run_stage(std::string("count-") + std::string(to_string(id)), log, [&] {
      detail::CountedCorpus cc;
      if (in.counts) {
        std::string content = read_file(*in.counts);
        cc.digest = "counts:" + digest_hex(content);
        cc.table = parse_counts_tsv(content, id);
        apply_min_count(cc.table, cfg.word_min_count);
        for (const auto& p : in.paths)
          for (auto& f : expand_corpus_paths(p)) cc.files.push_back(std::move(f));
        return cc;
      }
      if (in.paths.empty()) throw ConfigError(std::string(to_string(id)) + " corpus: no files or counts given");
      for (const auto& p : in.paths)
        for (auto& f : expand_corpus_paths(p)) cc.files.push_back(std::move(f));
      cc.digest = digest_files(cc.files);
      cc.table = cached(
          "count-" + std::string(to_string(id)),
          "counts-" + cc.digest + "-m" + std::to_string(cfg.word_min_count) + ".tsv",
          [&] { return count_unigrams_files(cc.files, id, cfg.word_min_count, cfg.threads); },
          [&](const std::string& s) { return parse_counts_tsv(s, id); }, write_counts_tsv);
      return cc;
    });
  };
  detail::CountedCorpus base = count(cfg.base, CorpusId::base);
  detail::CountedCorpus domain = count(cfg.domain, CorpusId::domain);

  auto sequences = [&](const detail::CountedCorpus& cc) {
    std::string stage = "sequences-" + std::string(to_string(cc.table.corpus));
    return detail::run_stage(stage, log, [&] {
      std::string key = digest_hex(cc.digest + "|" + tok.digest() + "|" + std::to_string(cfg.lambda) + "|" +
                                   std::to_string(cfg.word_min_count));
      return cached(
          stage, "sequences-" + key + ".tsv",
          [&] { return build_sequence_distribution(cc.table, tok, cfg.lambda, cfg.threads); },
          [&](const std::string& s) {
            auto d = parse_sequence_tsv(s);
            d.corpus = cc.table.corpus;
            return d;
          },
          write_sequence_tsv);
    });
  };
  SequenceDistribution base_seq = sequences(base);
  SequenceDistribution domain_seq = sequences(domain);

  auto candidates = detail::run_stage(
      "score", log, [&] { return score_candidates(domain_seq, base_seq, tok, cfg.selection.mode, cfg.threads); });
  result.selection =
      detail::run_stage("select", log, [&] { return select_augmentations(candidates, cfg.selection, tok); });

  std::vector<std::string> surfaces;
  for (const auto& c : result.selection) surfaces.push_back(c.seq.surface);

  ContextualInputEmbeddings c_base = detail::run_stage("load-base-embeddings", log, [&] {
    return ContextualInputEmbeddings{load_word2vec_text(*cfg.base_embeddings), cfg.source_model_id};
  });

  Manifest emb_info;
  emb_info["method"] = std::string(to_string(cfg.init));
  emb_info["base_embeddings_digest"] = digest_hex(read_file(*cfg.base_embeddings));
  emb_info["source_model_id"] = cfg.source_model_id;
  std::vector<std::string> fallbacks;
  EmbeddingMatrix vectors(c_base.dim(), Provenance::computed);

  if (cfg.init == InitMethod::mean) {
    detail::run_stage("init-mean", log, [&] {
      for (const auto& c : result.selection) vectors.add(c.seq.surface, mean_init(c.seq, tok, c_base));
      return 0;
    });
  } else {
    BpeTokenizer augmented = tok.add_tokens(std::span<const std::string>(surfaces));
    auto static_for = [&](const std::optional<fs::path>& file, const detail::CountedCorpus& cc, const char* name) {
      std::string stage = std::string("static-") + name;
      return detail::run_stage(stage, log, [&] {
        if (file) return load_word2vec_text(*file);
        if (cc.files.empty())
          throw ConfigError(std::string(name) + " corpus text is required to train static embeddings");
        std::string key = digest_hex(digest_files(cc.files) + "|" + augmented.digest() + "|" +
                                     detail::sgns_json(cfg.sgns).dump());
        return cached(
            stage, "static-" + key + ".txt",
            [&] { return train_sgns(TokenizedCorpus(cc.files, augmented), cfg.sgns); },
            [&](const std::string& s) { return parse_word2vec_text(s, Provenance::trained); }, write_word2vec_text);
      });
    };
    EmbeddingMatrix x_base = static_for(cfg.x_base, base, "base");
    EmbeddingMatrix x_domain = static_for(cfg.x_domain, domain, "domain");

    ProjectionMap map = detail::run_stage("fit-projection", log,
                                          [&] { return fit_projection(x_base, c_base.table, cfg.fit, cfg.ridge); });
    detail::run_stage("init-proj", log, [&] {
      for (const auto& c : result.selection) {
        auto v = project_init(c.seq.surface, x_domain, map);
        if (!v) {
          fallbacks.push_back(c.seq.surface);
          v = mean_init(c.seq, tok, c_base);
        }
        vectors.add(c.seq.surface, *v);
      }
      return 0;
    });
    emb_info["fit_method"] = std::string(to_string(cfg.fit));
    emb_info["ridge"] = cfg.ridge;
    emb_info["fitting_rows"] = map.fit_rows;
    emb_info["fit_residual"] = map.fit_residual;
    emb_info["static_base_rows"] = x_base.size();
    emb_info["static_domain_rows"] = x_domain.size();
  }
  emb_info["fallback_to_mean"] = fallbacks;

  Manifest manifest;
  Manifest config;
  config["lambda"] = cfg.lambda;
  config["f_min"] = cfg.selection.f_min;
  config["eta"] = cfg.selection.eta;
  config["max_len"] = cfg.selection.max_len;
  config["mode"] = std::string(to_string(cfg.selection.mode));
  config["require_both"] = cfg.selection.require_both;
  config["word_min_count"] = cfg.word_min_count;
  config["log_base"] = "e";
  config["score"] = "p_domain * ln(p_domain / p_base)";
  config["length_rule"] = "2 <= len <= max_len";
  config["frequency_rule"] = "count >= f_min";
  config["tie_break"] = "score desc, length asc, surface asc, token ids asc";
  config["added_token_form"] = "bare";
  config["init"] = std::string(to_string(cfg.init));
  config["fit_method"] = std::string(to_string(cfg.fit));
  config["ridge"] = cfg.ridge;
  config["sgns"] = detail::sgns_json(cfg.sgns);
  manifest["config"] = config;

  Manifest inputs;
  inputs["base_corpus_digest"] = base.digest;
  inputs["domain_corpus_digest"] = domain.digest;
  manifest["inputs"] = inputs;

  Manifest counts;
  counts["base_word_total"] = base.table.total_tokens;
  counts["domain_word_total"] = domain.table.total_tokens;
  counts["base_word_types"] = base.table.counts.size();
  counts["domain_word_types"] = domain.table.counts.size();
  counts["base_sequences"] = base_seq.counts.size();
  counts["domain_sequences"] = domain_seq.counts.size();
  counts["candidates_scored"] = candidates.size();
  counts["requested"] = cfg.selection.eta;
  counts["selected"] = result.selection.size();
  counts["exhausted"] = result.selection.size() < cfg.selection.eta;
  manifest["counts"] = counts;
  manifest["embeddings"] = emb_info;

  Manifest stages = Manifest::array();
  for (const auto& s : log) stages.push_back(s);
  stages.push_back("emit");
  manifest["stages"] = stages;

  result.bundle = detail::run_stage("emit", log, [&] {
    return emit_bundle(tok, result.selection, vectors, cfg.out_dir, std::move(manifest));
  });
  return result;
}

}  // namespace adaptok

#endif  // ADAPTOK_PIPELINE_HPP
