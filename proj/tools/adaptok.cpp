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

// adaptok command line: count, score, select, train-static, init-embed, augment, stats.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "adaptok/adaptok.hpp"

namespace fs = std::filesystem;
using namespace adaptok;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// --threads, capped by ADAPTOK_THREADS.
unsigned resolve_threads(unsigned requested) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (std::getenv("ADAPTOK_THREADS")) n = std::min(n, default_threads());
  return n;
}

std::vector<fs::path> expand_all(const std::vector<std::string>& specs) {
  std::vector<fs::path> out;
  for (const auto& s : specs)
    for (auto& f : expand_corpus_paths(s)) out.push_back(std::move(f));
  return out;
}

void add_sgns_options(CLI::App* cmd, SgnsConfig& c, const std::string& prefix) {
  cmd->add_option("--" + prefix + "dim", c.dim, "Static embedding dimension")->capture_default_str();
  cmd->add_option("--" + prefix + "window", c.window, "Context window")->capture_default_str();
  cmd->add_option("--" + prefix + "min-count", c.min_count, "Minimum token count")->capture_default_str();
  cmd->add_option("--" + prefix + "epochs", c.epochs)->capture_default_str();
  cmd->add_option("--" + prefix + "sample", c.sample, "Downsampling threshold")->capture_default_str();
  cmd->add_option("--" + prefix + "negatives", c.negatives)->capture_default_str();
  cmd->add_option("--" + prefix + "alpha", c.alpha)->capture_default_str();
  cmd->add_option("--" + prefix + "seed", c.seed)->capture_default_str();
  cmd->add_option("--" + prefix + "workers", c.workers, "Training threads; >1 is not reproducible")
      ->capture_default_str();
}

void add_selection_options(CLI::App* cmd, SelectionConfig& s, std::string& mode) {
  cmd->add_option("--eta", s.eta, "Number of sequences to add")->capture_default_str();
  cmd->add_option("--f-min", s.f_min, "Minimum sequence count")->capture_default_str();
  cmd->add_option("--max-len", s.max_len, "Maximum sequence length in subtokens")->capture_default_str();
  cmd->add_flag("--require-both,!--domain-only", s.require_both,
                "Apply --f-min to the base count as well (default on)");
  cmd->add_option("--mode", mode, "conditional or marginal")->capture_default_str();
}

struct Options {
  unsigned threads = 0;

  // count
  std::vector<std::string> corpus;
  std::string corpus_id = "domain";
  std::uint64_t min_count = 1;
  fs::path out;

  // score / select / init-embed / stats
  fs::path tokenizer_dir, base_counts, domain_counts, candidates, selection, bundle;
  int lambda = 10;
  std::string mode = "conditional";
  SelectionConfig sel;

  // embeddings
  SgnsConfig sgns;
  std::string method = "mean", fit = "closed";
  fs::path base_embeddings, x_base, x_domain, emit_dir;
  double ridge = 1e-6;
  std::string source_model = "roberta-base";

  // augment
  std::vector<std::string> base_corpus, domain_corpus;
  fs::path cache_dir;
};

// Surfaces are rebuilt from the ids.
std::vector<AugmentationCandidate> load_candidates(const fs::path& file, const BpeTokenizer& tok) {
  auto cands = parse_candidates_tsv(read_file(file));
  for (auto& c : cands) {
    for (auto id : c.seq.ids)
      if (id < 0 || static_cast<std::size_t>(id) >= tok.size())
        throw DataError(file.string() + ": token id " + std::to_string(id) + " out of range");
    c.seq = tok.make_sequence(c.seq.ids);
  }
  return cands;
}

int cmd_count(const Options& o) {
  auto files = expand_all(o.corpus);
  auto table = count_unigrams_files(files, parse_corpus_id(o.corpus_id), o.min_count, resolve_threads(o.threads));
  write_file_atomic(o.out, write_counts_tsv(table));
  std::cerr << "counted " << table.total_tokens << " words, " << table.counts.size() << " types";
  if (table.invalid_utf8) std::cerr << ", " << table.invalid_utf8 << " invalid UTF-8 sequences replaced";
  std::cerr << "\n";
  return 0;
}

int cmd_score(const Options& o) {
  auto tok = load_tokenizer_dir(o.tokenizer_dir);
  unsigned threads = resolve_threads(o.threads);
  auto base = load_counts_tsv(o.base_counts, CorpusId::base);
  auto domain = load_counts_tsv(o.domain_counts, CorpusId::domain);
  apply_min_count(base, o.min_count);
  apply_min_count(domain, o.min_count);
  auto base_seq = build_sequence_distribution(base, tok, o.lambda, threads);
  auto domain_seq = build_sequence_distribution(domain, tok, o.lambda, threads);
  auto cands = score_candidates(domain_seq, base_seq, tok, parse_probability_mode(o.mode), threads);
  write_file_atomic(o.out, write_candidates_tsv(cands));
  std::cerr << "scored " << cands.size() << " shared sequences\n";
  return 0;
}

int cmd_select(const Options& o) {
  auto tok = load_tokenizer_dir(o.tokenizer_dir);
  auto cfg = o.sel;
  cfg.mode = parse_probability_mode(o.mode);
  auto cands = load_candidates(o.candidates, tok);
  auto kept = select_augmentations(cands, cfg, tok);
  write_file_atomic(o.out, write_candidates_tsv(kept));
  std::cerr << "selected " << kept.size() << " of " << cfg.eta << " requested\n";
  return 0;
}

int cmd_train_static(const Options& o) {
  auto tok = load_tokenizer_dir(o.tokenizer_dir);
  TokenizedCorpus source(expand_all(o.corpus), tok);
  auto m = train_sgns(source, o.sgns);
  write_file_atomic(o.out, write_word2vec_text(m));
  std::cerr << "trained " << m.size() << " vectors of dim " << m.dim() << "\n";
  return 0;
}

int cmd_init_embed(const Options& o) {
  auto tok = load_tokenizer_dir(o.tokenizer_dir);
  if (tok.added_count() != 0) throw ConfigError("--tokenizer-dir must hold the base tokenizer");
  auto selection = load_candidates(o.selection, tok);
  ContextualInputEmbeddings c_base{load_word2vec_text(o.base_embeddings), o.source_model};

  EmbeddingMatrix vectors(c_base.dim(), Provenance::computed);
  std::size_t fallbacks = 0;
  if (parse_init_method(o.method) == InitMethod::mean) {
    for (const auto& c : selection) vectors.add(c.seq.surface, mean_init(c.seq, tok, c_base));
  } else {
    if (o.x_base.empty() || o.x_domain.empty()) throw ConfigError("--method proj needs --x-base and --x-domain");
    auto x_base = load_word2vec_text(o.x_base);
    auto x_domain = load_word2vec_text(o.x_domain);
    auto map = fit_projection(x_base, c_base.table, parse_fit_method(o.fit), o.ridge);
    std::cerr << "fitted projection on " << map.fit_rows << " tokens, residual " << map.fit_residual << "\n";
    for (const auto& c : selection) {
      auto v = project_init(c.seq.surface, x_domain, map);
      if (!v) {
        ++fallbacks;
        v = mean_init(c.seq, tok, c_base);
      }
      vectors.add(c.seq.surface, *v);
    }
  }
  if (!o.out.empty()) write_file_atomic(o.out, write_word2vec_text(vectors));
  if (!o.emit_dir.empty()) {
    Manifest m;
    m["config"] = {{"init", o.method}, {"fit_method", o.fit}, {"ridge", o.ridge}};
    m["embeddings"] = {{"source_model_id", o.source_model}, {"fallback_to_mean_count", fallbacks}};
    emit_bundle(tok, selection, vectors, o.emit_dir, m);
  }
  std::cerr << "initialized " << vectors.size() << " embeddings";
  if (fallbacks) std::cerr << " (" << fallbacks << " fell back to mean)";
  std::cerr << "\n";
  return 0;
}

CorpusInput corpus_input(const std::vector<std::string>& paths, const fs::path& counts) {
  CorpusInput in;
  in.paths = paths;
  if (!counts.empty()) in.counts = counts;
  return in;
}

int cmd_augment(const Options& o) {
  PipelineConfig cfg;
  cfg.base = corpus_input(o.base_corpus, o.base_counts);
  cfg.domain = corpus_input(o.domain_corpus, o.domain_counts);
  cfg.tokenizer_dir = o.tokenizer_dir;
  cfg.out_dir = o.out;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  cfg.word_min_count = o.min_count;
  cfg.lambda = o.lambda;
  cfg.selection = o.sel;
  cfg.selection.mode = parse_probability_mode(o.mode);
  cfg.init = parse_init_method(o.method);
  if (!o.base_embeddings.empty()) cfg.base_embeddings = o.base_embeddings;
  cfg.source_model_id = o.source_model;
  if (!o.x_base.empty()) cfg.x_base = o.x_base;
  if (!o.x_domain.empty()) cfg.x_domain = o.x_domain;
  cfg.sgns = o.sgns;
  cfg.fit = parse_fit_method(o.fit);
  cfg.ridge = o.ridge;
  cfg.threads = resolve_threads(o.threads);

  auto r = run_pipeline(cfg);
  std::cerr << "added " << r.selection.size() << " tokens";
  if (!r.cache_hits.empty()) std::cerr << " (" << r.cache_hits.size() << " stages from cache)";
  std::cerr << " -> " << o.out.string() << "\n";
  return 0;
}

int cmd_stats(const Options& o) {
  if (o.corpus.empty() == o.domain_counts.empty()) throw ConfigError("stats needs exactly one of --corpus, --domain-counts");
  auto base = load_tokenizer_dir(o.tokenizer_dir);
  auto augmented = load_tokenizer_dir(o.bundle);
  if (augmented.base_digest() != base.base_digest())
    throw ConfigError("bundle was not built from the tokenizer in --tokenizer-dir");
  UnigramTable words = o.domain_counts.empty()
                           ? count_unigrams_files(expand_all(o.corpus), CorpusId::domain, 1, resolve_threads(o.threads))
                           : load_counts_tsv(o.domain_counts, CorpusId::domain);
  auto s = measure_compression(words, base, augmented);
  Manifest out;
  out["words"] = s.words;
  out["added_tokens"] = augmented.added_count();
  out["base_tokens"] = s.base_tokens;
  out["augmented_tokens"] = s.augmented_tokens;
  out["base_tokens_per_word"] = s.base_tokens_per_word();
  out["augmented_tokens_per_word"] = s.augmented_tokens_per_word();
  out["reduction"] = s.base_tokens ? 1.0 - static_cast<double>(s.augmented_tokens) / s.base_tokens : 0.0;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain vocabulary augmentation for byte-level BPE tokenizers", "adaptok"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores; ADAPTOK_THREADS caps this)");

  auto* count = app.add_subcommand("count", "Count whitespace words in a corpus");
  count->add_option("--corpus", o.corpus, "File, directory or glob; repeatable")->required();
  count->add_option("--out", o.out, "counts.tsv to write")->required();
  count->add_option("--min-count", o.min_count, "Drop word types below this count")->capture_default_str();
  count->add_option("--corpus-id", o.corpus_id, "base or domain")->capture_default_str();

  auto* score = app.add_subcommand("score", "Score subtoken sequences shared by two corpora");
  score->add_option("--base-counts", o.base_counts)->required()->check(CLI::ExistingFile);
  score->add_option("--domain-counts", o.domain_counts)->required()->check(CLI::ExistingFile);
  score->add_option("--tokenizer-dir", o.tokenizer_dir, "Directory with vocab.json and merges.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  score->add_option("--mode", o.mode, "conditional or marginal")->capture_default_str();
  score->add_option("--lambda", o.lambda, "Longest prefix counted per word")->capture_default_str();
  score->add_option("--min-count", o.min_count, "Drop word types below this count")->capture_default_str();
  score->add_option("--out", o.out, "candidates.tsv to write")->required();

  auto* select = app.add_subcommand("select", "Pick the top sequences from candidates.tsv");
  select->add_option("--candidates", o.candidates)->required()->check(CLI::ExistingFile);
  select->add_option("--tokenizer-dir", o.tokenizer_dir)->required()->check(CLI::ExistingDirectory);
  add_selection_options(select, o.sel, o.mode);
  select->add_option("--out", o.out, "Selected rows, candidates.tsv format")->required();

  auto* train = app.add_subcommand("train-static", "Train skip-gram vectors over tokenized text");
  train->add_option("--corpus", o.corpus)->required();
  train->add_option("--tokenizer-dir", o.tokenizer_dir, "Tokenizer or bundle directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_sgns_options(train, o.sgns, "");
  train->add_option("--out", o.out, "word2vec text file to write")->required();

  auto* init = app.add_subcommand("init-embed", "Initialize embeddings for selected sequences");
  init->add_option("--selection", o.selection, "Output of select")->required()->check(CLI::ExistingFile);
  init->add_option("--tokenizer-dir", o.tokenizer_dir)->required()->check(CLI::ExistingDirectory);
  init->add_option("--method", o.method, "mean or proj")->capture_default_str();
  init->add_option("--base-embeddings", o.base_embeddings, "Model input embeddings, word2vec text")
      ->required()
      ->check(CLI::ExistingFile);
  init->add_option("--x-base", o.x_base, "Static vectors on the base corpus")->check(CLI::ExistingFile);
  init->add_option("--x-domain", o.x_domain, "Static vectors on the domain corpus")->check(CLI::ExistingFile);
  init->add_option("--ridge", o.ridge)->capture_default_str();
  init->add_option("--fit", o.fit, "closed or sgd")->capture_default_str();
  init->add_option("--source-model", o.source_model)->capture_default_str();
  init->add_option("--out", o.out, "word2vec text file of the new rows");
  init->add_option("--emit", o.emit_dir, "Also write a full bundle here");

  auto* augment = app.add_subcommand("augment", "Run the whole pipeline and write a bundle");
  augment->add_option("--base-corpus", o.base_corpus, "File, directory or glob; repeatable");
  augment->add_option("--base-counts", o.base_counts, "Precomputed counts.tsv")->check(CLI::ExistingFile);
  augment->add_option("--domain-corpus", o.domain_corpus, "File, directory or glob; repeatable");
  augment->add_option("--domain-counts", o.domain_counts)->check(CLI::ExistingFile);
  augment->add_option("--tokenizer-dir", o.tokenizer_dir)->required()->check(CLI::ExistingDirectory);
  augment->add_option("--base-embeddings", o.base_embeddings)->required()->check(CLI::ExistingFile);
  augment->add_option("--out", o.out, "Bundle directory")->required();
  augment->add_option("--cache-dir", o.cache_dir);
  augment->add_option("--lambda", o.lambda)->capture_default_str();
  augment->add_option("--min-count", o.min_count, "Word type threshold when counting")->capture_default_str();
  add_selection_options(augment, o.sel, o.mode);
  augment->add_option("--method", o.method, "mean or proj")->capture_default_str();
  augment->add_option("--x-base", o.x_base)->check(CLI::ExistingFile);
  augment->add_option("--x-domain", o.x_domain)->check(CLI::ExistingFile);
  augment->add_option("--ridge", o.ridge)->capture_default_str();
  augment->add_option("--fit", o.fit)->capture_default_str();
  augment->add_option("--source-model", o.source_model)->capture_default_str();
  add_sgns_options(augment, o.sgns, "static-");

  auto* stats = app.add_subcommand("stats", "Tokens per word before and after augmentation");
  stats->add_option("--tokenizer-dir", o.tokenizer_dir)->required()->check(CLI::ExistingDirectory);
  stats->add_option("--bundle", o.bundle)->required()->check(CLI::ExistingDirectory);
  stats->add_option("--corpus", o.corpus);
  stats->add_option("--domain-counts", o.domain_counts)->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*count) return cmd_count(o);
    if (*score) return cmd_score(o);
    if (*select) return cmd_select(o);
    if (*train) return cmd_train_static(o);
    if (*init) return cmd_init_embed(o);
    if (*augment) return cmd_augment(o);
    if (*stats) return cmd_stats(o);
  } catch (const ConfigError& e) {
    std::cerr << "adaptok: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "adaptok: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "adaptok: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "adaptok: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
