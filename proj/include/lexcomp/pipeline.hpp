#pragma once

// End-to-end pipeline: corpus -> token cache -> targets -> semantic spaces
// -> advection -> equalization -> regression -> randomization, with every
// derived artifact cached or written under the configured directories.
// All randomness flows from the config seed, and cached artifacts round-trip
// exactly, so warm reruns reproduce cold results byte for byte.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lexcomp/advection.hpp"
#include "lexcomp/competition.hpp"
#include "lexcomp/config.hpp"
#include "lexcomp/cooc.hpp"
#include "lexcomp/corpus.hpp"
#include "lexcomp/counts.hpp"
#include "lexcomp/dataset.hpp"
#include "lexcomp/mwu.hpp"
#include "lexcomp/randomization.hpp"
#include "lexcomp/regression.hpp"
#include "lexcomp/space.hpp"
#include "lexcomp/targets.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

namespace detail {

template <typename F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

// Token cache: "TOK1", then per document i32 unit, u32 length, u32 ids[].
class TokenCacheWriter {
 public:
  explicit TokenCacheWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write '" + path + "'");
    out_.write("TOK1", 4);
  }

  void add(int unit, const std::vector<std::uint32_t>& ids) {
    const std::int32_t u = unit;
    const std::uint32_t n = static_cast<std::uint32_t>(ids.size());
    out_.write(reinterpret_cast<const char*>(&u), sizeof(u));
    out_.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out_.write(reinterpret_cast<const char*>(ids.data()),
               static_cast<std::streamsize>(ids.size() * sizeof(std::uint32_t)));
  }

  void close(const std::string& path) {
    out_.flush();
    if (!out_) throw Error("write failed for '" + path + "'");
    out_.close();
  }

 private:
  std::ofstream out_;
};

template <typename F>
void for_each_cached_doc(const std::string& path, F&& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open token cache '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "TOK1")
    throw Error("'" + path + "' is not a token cache");
  std::vector<std::uint32_t> ids;
  for (;;) {
    std::int32_t unit = 0;
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&unit), sizeof(unit));
    if (!in) break;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in) throw Error("'" + path + "': truncated record header");
    ids.resize(n);
    in.read(reinterpret_cast<char*>(ids.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
    if (!in && n > 0) throw Error("'" + path + "': truncated record body");
    f(static_cast<int>(unit), ids);
  }
}

inline std::string span_tag(UnitSpan s) {
  return std::to_string(s.first) + "_" + std::to_string(s.last);
}

}  // namespace detail

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    out_ = cfg_.out_dir;
    cache_ = cfg_.resolved_cache_dir();
  }

  const PipelineConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const CountsTable& counts() const { return counts_; }
  const CorpusStats& corpus_stats() const { return stats_; }

  // ---- stage: ingest --------------------------------------------------------

  void ingest(bool force_rebuild = false) {
    if (ingested_) return;
    detail::run_stage("ingest", [&] {
      namespace fs = std::filesystem;
      fs::create_directories(out_);
      fs::create_directories(cache_);
      if (!force_rebuild && cache_is_warm()) {
        warm_load();
      } else {
        cold_build();
      }
      ingested_ = true;
    });
  }

  // ---- stage: target selection ---------------------------------------------

  const std::vector<TargetRecord>& targets() {
    ingest();
    if (have_targets_) return targets_;
    detail::run_stage("targets", [&] {
      if (cfg_.twitter_mode && !has_authors_)
        throw Error("twitter_mode requires author ids, but the corpus has none");
      SelectionConfig sel;
      sel.span_len = cfg_.span_len;
      sel.min_log_change = cfg_.min_log_change;
      sel.min_t2_count = cfg_.min_t2_count;
      sel.min_t2_coverage = cfg_.min_t2_coverage;
      sel.max_peak_z = cfg_.max_peak_z;
      sel.direction = cfg_.direction;
      sel.use_account_filter = cfg_.twitter_mode;
      sel.min_user_ratio = cfg_.min_user_ratio;
      targets_ = find_targets(counts_, vocab_, sel, has_authors_ ? &authors_ : nullptr);
      save_targets_csv(targets_, (out_ / "targets.csv").string(), stamp());
      have_targets_ = true;
    });
    return targets_;
  }

  // ---- stage: full analysis -------------------------------------------------

  void analyze() {
    targets();
    rows_.clear();
    rand_inputs_ = RandomizationInputs{};
    skipped_topic_absent_ = 0;
    skipped_fold_ = 0;
    skipped_no_neighbors_ = 0;
    space_notes_ = nlohmann::ordered_json::array();

    // Group targets by span pair (all spans have equal length, so the first
    // unit of t1 identifies the pair).
    std::map<int, std::vector<std::size_t>> by_pair;
    for (std::size_t i = 0; i < targets_.size(); ++i)
      by_pair[targets_[i].t1.span.first].push_back(i);

    for (const auto& [key, idxs] : by_pair)
      detail::run_stage("semantic-space", [&, key = key] { analyze_pair(idxs); });

    detail::run_stage("analysis-table", [&] {
      save_analysis_csv(rows_, (out_ / "analysis.csv").string(), stamp());
      save_randomization_inputs(rand_inputs_, (out_ / "randomization_inputs.bin").string());
    });

    // Regression (and the plot data for the rows it uses).
    regression_note_ = "";
    DesignOptions opt;
    opt.include_exhausted = cfg_.include_exhausted;
    opt.apply_leftover_filter = true;
    opt.zscore = cfg_.zscore_predictors;
    rand_inputs_.design = opt;
    bool have_models = false;
    ModelPair models;
    try {
      detail::run_stage("regression", [&] {
        models = fit_models(rows_, opt);
        have_models = true;
      });
    } catch (const Error& e) {
      if (rows_.empty())
        regression_note_ = "skipped: no analysis rows";
      else
        regression_note_ = std::string("skipped: ") + e.what();
    }
    if (have_models) {
      detail::run_stage("regression", [&] {
        write_regression(models);
        write_plot_data(models.design);
      });
    }

    // Randomization test.
    randomization_note_ = "";
    std::optional<RandomizationResult> rand_result;
    if (cfg_.randomize_r > 0 && have_models) {
      detail::run_stage("randomization", [&] {
        const std::uint64_t rand_seed = derive_seed(cfg_.seed, 0xA11D0ULL);
        rand_result =
            randomization_test(rand_inputs_, cfg_.randomize_r, rand_seed, cfg_.alpha);
        write_randomization(*rand_result);
      });
    } else if (cfg_.randomize_r > 0) {
      randomization_note_ = "skipped: regression unavailable";
    } else {
      randomization_note_ = "skipped: randomize_r = 0";
    }

    detail::run_stage("manifest", [&] { write_manifest(have_models, models, rand_result); });
  }

  const std::vector<AnalysisRow>& analysis_rows() const { return rows_; }

  // Refit the regression from a previously written analysis table.
  ModelPair regress_from(const std::string& analysis_csv) {
    std::filesystem::create_directories(out_);
    ModelPair models;
    detail::run_stage("regression", [&] {
      rows_ = load_analysis_csv(analysis_csv);
      DesignOptions opt;
      opt.include_exhausted = cfg_.include_exhausted;
      opt.apply_leftover_filter = true;
      opt.zscore = cfg_.zscore_predictors;
      models = fit_models(rows_, opt);
      write_regression(models);
      write_plot_data(models.design);
    });
    return models;
  }

  // Rerun the permutation test from saved inputs.
  RandomizationResult randomize_from(const std::string& inputs_path, int runs,
                                     std::uint64_t seed) {
    std::filesystem::create_directories(out_);
    RandomizationResult res;
    detail::run_stage("randomization", [&] {
      const RandomizationInputs in = load_randomization_inputs(inputs_path);
      res = randomization_test(in, runs, seed, cfg_.alpha);
      write_randomization(res);
    });
    return res;
  }

 private:
  // ---- cache paths ----------------------------------------------------------

  std::filesystem::path meta_path() const { return cache_ / "meta.json"; }
  std::filesystem::path vocab_path() const { return cache_ / "vocab.txt"; }
  std::filesystem::path tokens_path() const { return cache_ / "tokens.bin"; }
  std::filesystem::path counts_path() const { return cache_ / "counts.tsv"; }
  std::filesystem::path totals_path() const { return cache_ / "totals.tsv"; }
  std::filesystem::path authors_path() const { return cache_ / "authors.tsv"; }
  std::filesystem::path mwus_path() const { return cache_ / "mwus.tsv"; }

  std::string stamp() const {
    return "config_hash=" + cfg_.hash_hex() + " seed=" + std::to_string(cfg_.seed);
  }

  bool cache_is_warm() const {
    namespace fs = std::filesystem;
    if (!fs::exists(meta_path())) return false;
    std::ifstream in(meta_path());
    if (!in) return false;
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception&) {
      return false;
    }
    if (!meta.contains("config_hash") || meta["config_hash"] != cfg_.hash_hex()) return false;
    for (const auto& p : {vocab_path(), tokens_path(), counts_path(), totals_path()})
      if (!fs::exists(p)) return false;
    return true;
  }

  void cold_build() {
    namespace fs = std::filesystem;
    // A cold build invalidates every cached artifact (spaces, matrices)
    // derived under a previous configuration.
    fs::remove_all(cache_);
    fs::create_directories(cache_);

    CorpusManifest mf;
    mf.unit_kind = cfg_.unit_kind;
    mf.unit_min = cfg_.unit_min;
    mf.unit_max = cfg_.unit_max;
    if (!cfg_.stoplist.empty()) mf.stopwords = load_stoplist(cfg_.stoplist);
    for (const auto& p : cfg_.excluded_pos) mf.excluded_pos.insert(p);
    for (const auto& path : cfg_.corpus)
      if (!fs::exists(path)) throw Error("corpus file '" + path + "' does not exist");

    mwus_ = MwuSet{};
    if (cfg_.mwu_enabled) {
      // Detection pass: association statistics over the filtered stream.
      std::size_t file_idx = 0;
      std::optional<CorpusStream> st;
      DocumentSource source = [&](std::vector<TokenEvent>& doc) {
        for (;;) {
          if (!st) {
            if (file_idx >= cfg_.corpus.size()) return false;
            st.emplace(cfg_.corpus[file_idx], mf);
            ++file_idx;
          }
          if (st->next_document(doc)) return true;
          st.reset();
        }
      };
      mwus_ = detect_mwus(source, cfg_.unit_min, cfg_.mwu_subspan_len, cfg_.mwu_ppmi_threshold);
      save_mwus(mwus_, mwus_path().string());
    }

    // Main pass: vocabulary, counts, token cache, author dispersion.
    vocab_ = Vocabulary{};
    counts_ = CountsTable(cfg_.unit_min, cfg_.unit_max);
    authors_ = AuthorStats{};
    has_authors_ = false;
    stats_ = CorpusStats{};
    detail::TokenCacheWriter cache_writer(tokens_path().string());
    std::unordered_map<std::uint64_t, std::unordered_set<std::uint64_t>> author_sets;

    std::vector<TokenEvent> doc;
    std::vector<std::uint32_t> ids;
    std::int64_t next_doc_id = 0;
    for (const auto& path : cfg_.corpus) {
      CorpusStream st(path, mf, next_doc_id);
      while (st.next_document(doc)) {
        if (cfg_.mwu_enabled) apply_mwus(doc, mwus_);
        if (doc.empty()) continue;
        const int unit = doc.front().time_unit;
        ids.clear();
        ids.reserve(doc.size());
        for (const auto& ev : doc) {
          const std::uint32_t id = vocab_.add_or_get(ev.lemma);
          ids.push_back(id);
          counts_.add(id, unit);
          if (!ev.author.empty()) {
            has_authors_ = true;
            const std::uint64_t key =
                (static_cast<std::uint64_t>(id) << 32) |
                static_cast<std::uint32_t>(unit - cfg_.unit_min);
            author_sets[key].insert(fnv1a64(ev.author));
          }
        }
        cache_writer.add(unit, ids);
      }
      stats_.accumulate(st.stats());
      next_doc_id = st.next_doc_id();
    }
    counts_.seal();
    cache_writer.close(tokens_path().string());

    authors_ = AuthorStats{};
    for (const auto& [key, set] : author_sets)
      authors_.add(static_cast<std::uint32_t>(key >> 32),
                   cfg_.unit_min + static_cast<int>(key & 0xffffffffu),
                   static_cast<std::int64_t>(set.size()));
    authors_.seal();

    // Persist the cache.
    {
      std::ofstream vout(vocab_path(), std::ios::binary);
      if (!vout) throw Error("cannot write '" + vocab_path().string() + "'");
      for (const auto& w : vocab_.words()) vout << w << '\n';
      if (!vout) throw Error("write failed for '" + vocab_path().string() + "'");
    }
    save_counts(counts_, vocab_, counts_path().string());
    save_totals(counts_.totals(), totals_path().string());
    if (has_authors_) {
      std::ofstream aout(authors_path(), std::ios::binary);
      if (!aout) throw Error("cannot write '" + authors_path().string() + "'");
      for (std::uint32_t w = 0; w < vocab_.size(); ++w)
        for (const auto& [u, c] : counts_.row(w)) {
          const std::int64_t d = authors_.distinct(w, u);
          if (d > 0) aout << vocab_.word(w) << '\t' << u << '\t' << d << '\n';
        }
      if (!aout) throw Error("write failed for '" + authors_path().string() + "'");
    }

    nlohmann::ordered_json meta;
    meta["version"] = kLibraryVersion;
    meta["config_hash"] = cfg_.hash_hex();
    meta["seed"] = cfg_.seed;
    meta["has_authors"] = has_authors_;
    meta["documents"] = stats_.documents;
    meta["documents_out_of_range"] = stats_.documents_out_of_range;
    meta["input_tokens"] = stats_.input_tokens;
    meta["kept_tokens"] = stats_.kept_tokens;
    meta["dropped_pos"] = stats_.dropped_pos;
    meta["dropped_mention"] = stats_.dropped_mention;
    meta["dropped_empty"] = stats_.dropped_empty;
    meta["dropped_stopword"] = stats_.dropped_stopword;
    meta["vocab_size"] = vocab_.size();
    std::ofstream mout(meta_path(), std::ios::binary);
    if (!mout) throw Error("cannot write '" + meta_path().string() + "'");
    mout << meta.dump(2) << '\n';
    if (!mout) throw Error("write failed for '" + meta_path().string() + "'");
  }

  void warm_load() {
    std::ifstream in(meta_path());
    nlohmann::json meta;
    in >> meta;
    has_authors_ = meta.value("has_authors", false);
    stats_ = CorpusStats{};
    stats_.documents = meta.value("documents", std::int64_t{0});
    stats_.documents_out_of_range = meta.value("documents_out_of_range", std::int64_t{0});
    stats_.input_tokens = meta.value("input_tokens", std::int64_t{0});
    stats_.kept_tokens = meta.value("kept_tokens", std::int64_t{0});
    stats_.dropped_pos = meta.value("dropped_pos", std::int64_t{0});
    stats_.dropped_mention = meta.value("dropped_mention", std::int64_t{0});
    stats_.dropped_empty = meta.value("dropped_empty", std::int64_t{0});
    stats_.dropped_stopword = meta.value("dropped_stopword", std::int64_t{0});

    vocab_ = Vocabulary{};
    {
      std::ifstream vin(vocab_path());
      if (!vin) throw Error("cannot open '" + vocab_path().string() + "'");
      std::string line;
      while (std::getline(vin, line)) {
        const auto t = trim(line);
        if (!t.empty()) vocab_.add_or_get(t);
      }
    }
    counts_ = CountsTable(cfg_.unit_min, cfg_.unit_max);
    load_counts(counts_path().string(), counts_, vocab_);
    authors_ = AuthorStats{};
    if (has_authors_ && std::filesystem::exists(authors_path())) {
      std::ifstream ain(authors_path());
      std::string line;
      std::int64_t line_no = 0;
      while (std::getline(ain, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto parts = split(line, '\t');
        if (parts.size() != 3)
          throw Error(authors_path().string() + ":" + std::to_string(line_no) +
                      ": want word<TAB>unit<TAB>distinct");
        const auto id = vocab_.find(trim(parts[0]));
        if (id == Vocabulary::npos)
          throw Error(authors_path().string() + ": unknown word '" +
                      std::string(trim(parts[0])) + "'");
        authors_.add(id, static_cast<int>(to_int64(trim(parts[1]), "authors unit")),
                     to_int64(trim(parts[2]), "authors distinct"));
      }
      authors_.seal();
    }
    mwus_ = MwuSet{};
    if (cfg_.mwu_enabled) mwus_ = load_mwus(mwus_path().string());
  }

  // ---- span-pair machinery --------------------------------------------------

  struct SpanVocab {
    std::vector<std::string> words;          // span vocabulary in global-id order
    std::vector<std::uint32_t> global_ids;   // aligned to words
    std::vector<std::uint32_t> local_of;     // global id -> local id or kOov
  };

  SpanVocab span_vocab(UnitSpan span) const {
    SpanVocab sv;
    sv.local_of.assign(vocab_.size(), CoocBuilder::kOov);
    for (std::uint32_t w = 0; w < vocab_.size(); ++w) {
      if (counts_.span_count(w, span) >= cfg_.min_token_count) {
        sv.local_of[w] = static_cast<std::uint32_t>(sv.words.size());
        sv.words.push_back(vocab_.word(w));
        sv.global_ids.push_back(w);
      }
    }
    return sv;
  }

  CoocMatrix build_span_cooc(UnitSpan span, int window) const {
    SpanVocab sv = span_vocab(span);
    if (sv.words.empty())
      throw Error("span [" + std::to_string(span.first) + "," + std::to_string(span.last) +
                  "]: no words reach min_token_count");
    CoocBuilder builder(sv.words, window);
    std::vector<std::uint32_t> local;
    detail::for_each_cached_doc(tokens_path().string(),
                                [&](int unit, const std::vector<std::uint32_t>& ids) {
                                  if (!span.contains(unit)) return;
                                  local.clear();
                                  local.reserve(ids.size());
                                  for (auto g : ids) local.push_back(sv.local_of[g]);
                                  builder.add_document(local);
                                });
    return builder.finish();
  }

  CoocMatrix cached_cooc(const std::string& name, UnitSpan span, int window) const {
    const auto path = cache_ / name;
    if (std::filesystem::exists(path)) return load_matrix(path.string());
    CoocMatrix m = build_span_cooc(span, window);
    save_matrix(m, path.string());
    return m;
  }

  SemanticSpace model_space(UnitSpan model, const CoocMatrix& model_counts) {
    const auto path = cache_ / ("space_" + detail::span_tag(model) + ".lsa1");
    if (std::filesystem::exists(path)) return load_space(path.string());
    const CoocMatrix weights = ppmi(model_counts);
    const int k = std::min<int>(cfg_.lsa_k, static_cast<int>(weights.size()));
    const std::uint64_t stream = 0x5ACE0000ULL ^
                                 (static_cast<std::uint64_t>(static_cast<std::uint32_t>(model.first))
                                  << 16) ^
                                 static_cast<std::uint32_t>(model.last & 0xffff);
    SemanticSpace sp = train_lsa(weights, k, derive_seed(cfg_.seed, stream));
    save_space(sp, path.string());
    return sp;
  }

  // Aggregate pmw of `word_id` over `span`.
  double span_pmw(std::uint32_t word_id, UnitSpan span) const {
    const std::int64_t tok = counts_.totals().in_span(span);
    return tok > 0 ? static_cast<double>(counts_.span_count(word_id, span)) * 1e6 /
                         static_cast<double>(tok)
                   : 0.0;
  }

  void analyze_pair(const std::vector<std::size_t>& idxs) {
    const TargetRecord& first = targets_[idxs.front()];
    const UnitSpan t1 = first.t1.span;
    const UnitSpan t2 = first.t2.span;
    const bool increase = cfg_.direction == Direction::increase;
    const UnitSpan model = increase ? t1 : t2;
    const UnitSpan probe = increase ? t2 : t1;
    const UnitSpan concat{t1.first, t2.last};

    const CoocMatrix model_counts =
        cached_cooc("cooc_model_" + detail::span_tag(model) + ".mm", model, cfg_.semantic_window);
    const CoocMatrix probe_counts =
        cached_cooc("cooc_probe_" + detail::span_tag(probe) + ".mm", probe, cfg_.semantic_window);
    const CoocMatrix topic_counts =
        cached_cooc("cooc_topic_" + detail::span_tag(concat) + ".mm", concat, cfg_.topic_window);
    const SemanticSpace space = model_space(model, model_counts);

    {
      nlohmann::ordered_json note;
      note["model_span"] = {model.first, model.last};
      note["vocabulary"] = space.vocab.size();
      note["k"] = space.k;
      space_notes_.push_back(std::move(note));
    }

    // Per-vocabulary-slot coverage and frequency in the model span, used by
    // the prevalence filter and tie-breaking.
    std::vector<double> coverage(space.vocab.size(), 0.0);
    std::vector<double> freq(space.vocab.size(), 0.0);
    std::vector<std::uint32_t> global_of(space.vocab.size(), Vocabulary::npos);
    for (std::uint32_t i = 0; i < space.vocab.size(); ++i) {
      const auto g = vocab_.find(space.vocab[i]);
      if (g == Vocabulary::npos)
        throw Error("space vocabulary word '" + space.vocab[i] + "' missing from corpus cache");
      global_of[i] = g;
      coverage[i] = static_cast<double>(counts_.span_units_present(g, model)) /
                    static_cast<double>(model.length());
      freq[i] = span_pmw(g, model);
    }

    // Candidate lexicon for the randomization test: every prevalent word.
    PairLexicon lex;
    std::unordered_map<std::string, std::uint32_t> lex_index;
    for (std::uint32_t i = 0; i < space.vocab.size(); ++i) {
      if (coverage[i] < cfg_.min_neighbor_coverage) continue;
      lex_index.emplace(space.vocab[i], static_cast<std::uint32_t>(lex.words.size()));
      lex.words.push_back(space.vocab[i]);
      lex.freqs.push_back(
          NeighborFreq{span_pmw(global_of[i], model), span_pmw(global_of[i], probe)});
    }
    rand_inputs_.pairs.push_back(std::move(lex));
    const auto pair_id = static_cast<std::uint32_t>(rand_inputs_.pairs.size() - 1);

    const double s1 = smoothing_pmw(counts_.totals().in_span(t1));
    const double s2 = smoothing_pmw(counts_.totals().in_span(t2));

    for (const std::size_t ti : idxs) {
      const TargetRecord& tr = targets_[ti];
      AnalysisRow row;
      row.word = tr.word;
      row.t1_start = tr.t1.span.first;
      row.t1_end = tr.t1.span.last;
      row.t2_start = tr.t2.span.first;
      row.t2_end = tr.t2.span.last;
      row.f1_pmw = tr.t1.f_pmw;
      row.f2_pmw = tr.t2.f_pmw;
      row.log_change = tr.log_change;
      row.pmw_change = tr.pmw_change;
      row.start_unit = tr.start_unit;
      row.coverage_t1 = tr.t1.coverage;
      row.coverage_t2 = tr.t2.coverage;
      row.peak_z = tr.peak_z;
      row.word_length = tr.word_length;
      row.user_ratio = tr.user_ratio;

      // Topic profile and advection over the concatenated spans.
      if (!topic_counts.index_of(tr.word)) {
        ++skipped_topic_absent_;
        continue;
      }
      const TopicProfile profile = topic_profile(topic_counts, tr.word, cfg_.topic_k);
      if (profile.words.empty()) {
        ++skipped_topic_absent_;
        continue;
      }
      std::vector<ContextChange> ctx_freqs;
      ctx_freqs.reserve(profile.words.size());
      for (const auto& [w, weight] : profile.words) {
        const auto g = vocab_.find(w);
        ctx_freqs.push_back(ContextChange{span_pmw(g, t1), span_pmw(g, t2)});
      }
      row.advection = advection_value(profile, ctx_freqs, s1, s2);
      row.n_topic_words = static_cast<int>(profile.words.size());

      // Fold the target's probe-span context row into the model space.
      const auto probe_idx = probe_counts.index_of(tr.word);
      if (!probe_idx) {
        ++skipped_fold_;
        continue;
      }
      SparseRow probe_row = ppmi_row(probe_counts, *probe_idx);
      SparseRow remapped;
      remapped.reserve(probe_row.size());
      for (const auto& [c, val] : probe_row) {
        const auto local = space.index_of(probe_counts.vocab[c]);
        if (local != space.npos) remapped.emplace_back(local, val);
      }
      std::sort(remapped.begin(), remapped.end());
      if (remapped.empty()) {
        ++skipped_fold_;
        continue;
      }
      const Eigen::VectorXd vec = fold_in(space, remapped);

      std::unordered_set<std::string> exclude;
      for (const auto& [w, weight] : profile.words) exclude.insert(w);
      NeighborList nl;
      try {
        nl = neighbors(space, vec, tr.word, coverage, freq, exclude,
                       cfg_.min_neighbor_coverage);
      } catch (const Error&) {
        ++skipped_no_neighbors_;
        continue;
      }

      std::vector<NeighborFreq> nfreqs;
      nfreqs.reserve(nl.entries.size());
      for (const auto& e : nl.entries)
        nfreqs.push_back(NeighborFreq{span_pmw(global_of[e.index], model),
                                      span_pmw(global_of[e.index], probe)});

      const double change = std::abs(tr.pmw_change);
      const CompetitionResult res = equalize(change, nl, nfreqs);
      const Controls ctl = make_controls(tr, nl, res, cfg_.neighbor_edit_range);

      row.nearest_cosine_distance = ctl.nearest_cosine_distance;
      row.min_edit_distance = ctl.min_edit_distance;
      row.max_decrease_pct = ctl.max_decrease_pct;
      row.equalization_range = res.equalization_range;
      row.n_equalizers = static_cast<int>(res.equalizers.size());
      row.leftover = res.leftover;
      row.exhausted = res.exhausted;
      row.leftover_drop = !leftover_filter_keep(res, change);

      RandTarget rt;
      rt.row = row;
      rt.row.pmw_change = change;  // the walk budget (positive in both directions)
      rt.pair_id = pair_id;
      rt.n_neighbors = static_cast<std::uint32_t>(nl.entries.size());
      const auto self = lex_index.find(tr.word);
      rt.self_index = self == lex_index.end() ? 0xffffffffu : self->second;
      rand_inputs_.targets.push_back(std::move(rt));
      for (const auto& e : nl.entries) rand_inputs_.distance_pool.push_back(e.cosine_distance);

      rows_.push_back(std::move(row));
    }
  }

  // ---- artifact writers -----------------------------------------------------

  static nlohmann::ordered_json model_json(const RegressionReport& rep) {
    nlohmann::ordered_json m;
    m["n"] = rep.n;
    m["predictors"] = rep.p;
    m["r2"] = rep.r2;
    m["adj_r2"] = rep.adj_r2;
    m["sse"] = rep.sse;
    auto terms = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.names.size(); ++i) {
      nlohmann::ordered_json t;
      t["name"] = rep.names[i];
      t["coef"] = rep.coef(static_cast<Eigen::Index>(i));
      t["se"] = rep.se(static_cast<Eigen::Index>(i));
      t["t"] = rep.tstat(static_cast<Eigen::Index>(i));
      t["p"] = rep.pvalue(static_cast<Eigen::Index>(i));
      terms.push_back(std::move(t));
    }
    m["terms"] = std::move(terms);
    return m;
  }

  void write_regression(const ModelPair& mp) const {
    nlohmann::ordered_json j;
    j["config_hash"] = cfg_.hash_hex();
    j["seed"] = cfg_.seed;
    j["rows_used"] = mp.full.n;
    j["dropped_exhausted"] = mp.design.n_dropped_exhausted;
    j["dropped_leftover"] = mp.design.n_dropped_leftover;
    j["dropped_constant_predictors"] = mp.design.dropped_constant;
    j["full"] = model_json(mp.full);
    j["reduced"] = model_json(mp.reduced);
    j["partial_r2"] = {{"comparative", mp.partial.comparative},
                       {"adj_r2_difference", mp.partial.adj_difference}};
    std::ofstream out(out_ / "regression.json", std::ios::binary);
    if (!out) throw Error("cannot write regression.json");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for regression.json");

    std::ofstream txt(out_ / "regression.txt", std::ios::binary);
    if (!txt) throw Error("cannot write regression.txt");
    txt << "# " << stamp() << "\n";
    auto table = [&](const char* title, const RegressionReport& rep) {
      txt << title << " (n=" << rep.n << ", R2=" << fmt_double(rep.r2)
          << ", adj R2=" << fmt_double(rep.adj_r2) << ")\n";
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %-26s %14s %12s %10s %12s\n", "term", "coef", "se", "t",
                    "p");
      txt << buf;
      for (std::size_t i = 0; i < rep.names.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "  %-26s %14.6g %12.6g %10.4g %12.6g\n",
                      rep.names[i].c_str(), rep.coef(static_cast<Eigen::Index>(i)),
                      rep.se(static_cast<Eigen::Index>(i)),
                      rep.tstat(static_cast<Eigen::Index>(i)),
                      rep.pvalue(static_cast<Eigen::Index>(i)));
        txt << buf;
      }
      txt << "\n";
    };
    table("full model", mp.full);
    table("reduced model (no advection)", mp.reduced);
    txt << "advection partial R2 (comparative): " << fmt_double(mp.partial.comparative) << "\n";
    txt << "advection adj R2 difference:        " << fmt_double(mp.partial.adj_difference)
        << "\n";
    if (!txt) throw Error("write failed for regression.txt");
  }

  void write_plot_data(const Design& design) const {
    std::ofstream out(out_ / "plot_data.csv", std::ios::binary);
    if (!out) throw Error("cannot write plot_data.csv");
    out << "# " << stamp() << "\nword,advection,equalization_range\n";
    for (const auto ri : design.row_index) {
      const auto& r = rows_[ri];
      out << r.word << ',' << fmt_double(r.advection) << ','
          << fmt_double(r.equalization_range) << '\n';
    }
    if (!out) throw Error("write failed for plot_data.csv");
  }

  void write_randomization(const RandomizationResult& res) const {
    nlohmann::ordered_json j;
    j["R"] = res.runs;
    j["seed"] = res.seed;
    j["alpha"] = res.alpha;
    j["fraction_significant"] = res.fraction_significant;
    j["config_hash"] = cfg_.hash_hex();
    auto arr = nlohmann::ordered_json::array();
    for (double p : res.per_permutation_p) arr.push_back(p);
    j["per_permutation_p"] = std::move(arr);
    std::ofstream out(out_ / "randomization.json", std::ios::binary);
    if (!out) throw Error("cannot write randomization.json");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for randomization.json");
  }

  void write_manifest(bool have_models, const ModelPair& mp,
                      const std::optional<RandomizationResult>& rand) const {
    nlohmann::ordered_json j;
    j["tool"] = "lexcomp";
    j["version"] = kLibraryVersion;
    j["config_hash"] = cfg_.hash_hex();
    j["seed"] = cfg_.seed;
    j["unit_range"] = {cfg_.unit_min, cfg_.unit_max};
    j["corpus"] = cfg_.corpus;
    nlohmann::ordered_json st;
    st["documents"] = stats_.documents;
    st["documents_out_of_range"] = stats_.documents_out_of_range;
    st["input_tokens"] = stats_.input_tokens;
    st["kept_tokens"] = stats_.kept_tokens;
    st["dropped_pos"] = stats_.dropped_pos;
    st["dropped_mention"] = stats_.dropped_mention;
    st["dropped_empty"] = stats_.dropped_empty;
    st["dropped_stopword"] = stats_.dropped_stopword;
    j["corpus_stats"] = std::move(st);
    j["vocab_size"] = vocab_.size();
    j["n_targets"] = targets_.size();
    j["n_analysis_rows"] = rows_.size();
    j["skipped_topic_absent"] = skipped_topic_absent_;
    j["skipped_fold_failed"] = skipped_fold_;
    j["skipped_no_neighbors"] = skipped_no_neighbors_;
    j["spaces"] = space_notes_;
    if (have_models) {
      nlohmann::ordered_json r;
      r["rows_used"] = mp.full.n;
      r["r2_full"] = mp.full.r2;
      r["adj_r2_full"] = mp.full.adj_r2;
      const int adv = mp.full.index_of("advection");
      r["advection_coef"] = mp.full.coef(adv);
      r["advection_p"] = mp.full.pvalue(adv);
      r["partial_r2_comparative"] = mp.partial.comparative;
      r["partial_adj_r2_difference"] = mp.partial.adj_difference;
      j["regression"] = std::move(r);
    } else {
      j["regression"] = regression_note_;
    }
    if (rand) {
      nlohmann::ordered_json r;
      r["R"] = rand->runs;
      r["fraction_significant"] = rand->fraction_significant;
      j["randomization"] = std::move(r);
    } else {
      j["randomization"] = randomization_note_;
    }
    auto outputs = nlohmann::ordered_json::array();
    for (const char* f : {"targets.csv", "analysis.csv", "plot_data.csv", "regression.json",
                          "regression.txt", "randomization_inputs.bin", "randomization.json",
                          "run_manifest.json"})
      if (std::filesystem::exists(out_ / f) || std::string_view(f) == "run_manifest.json")
        outputs.push_back(f);
    j["outputs"] = std::move(outputs);
    std::ofstream out(out_ / "run_manifest.json", std::ios::binary);
    if (!out) throw Error("cannot write run_manifest.json");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for run_manifest.json");
  }

  PipelineConfig cfg_;
  std::filesystem::path out_, cache_;
  bool ingested_ = false;
  Vocabulary vocab_;
  CountsTable counts_;
  AuthorStats authors_;
  bool has_authors_ = false;
  MwuSet mwus_;
  CorpusStats stats_;
  std::vector<TargetRecord> targets_;
  bool have_targets_ = false;
  std::vector<AnalysisRow> rows_;
  RandomizationInputs rand_inputs_;
  int skipped_topic_absent_ = 0;
  int skipped_fold_ = 0;
  int skipped_no_neighbors_ = 0;
  nlohmann::ordered_json space_notes_ = nlohmann::ordered_json::array();
  std::string regression_note_, randomization_note_;
};

}  // namespace lexcomp
