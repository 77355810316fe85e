#pragma once

// Randomization test: rebuild every target's neighbor list from uniformly
// sampled pseudo-neighbors with similarity scores resampled from the
// empirical pool, recompute the walk-derived quantities, refit the full
// model, and report how often advection comes out significant by chance.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lexcomp/competition.hpp"
#include "lexcomp/dataset.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

// Candidate universe for one span pair: the words a real neighbor list was
// drawn from, with their span frequencies (model-span first).
struct PairLexicon {
  std::vector<std::string> words;
  std::vector<NeighborFreq> freqs;
};

struct RandTarget {
  AnalysisRow row;               // real covariates; neighbor-derived ones get replaced
  std::uint32_t pair_id = 0;     // which PairLexicon this target draws from
  std::uint32_t n_neighbors = 0; // real neighbor-list length
  std::uint32_t self_index = 0xffffffffu;  // target's own slot in the lexicon, if any
};

struct RandomizationInputs {
  std::vector<RandTarget> targets;
  std::vector<PairLexicon> pairs;
  std::vector<double> distance_pool;  // all observed cosine distances
  DesignOptions design;               // exhausted-row policy carried over
};

struct RandomizationResult {
  int runs = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  double fraction_significant = 0;
  std::vector<double> per_permutation_p;
};

namespace detail {

// First `n` elements of a seeded partial Fisher-Yates shuffle of
// {0..size-1} \ {skip}: distinct uniform indices.
inline std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint32_t size, std::uint32_t n,
                                                  std::uint32_t skip) {
  std::vector<std::uint32_t> idx;
  idx.reserve(size);
  for (std::uint32_t i = 0; i < size; ++i)
    if (i != skip) idx.push_back(i);
  if (n > idx.size())
    throw Error("randomization: neighbor list longer than candidate lexicon");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::uint32_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

}  // namespace detail

inline RandomizationResult randomization_test(const RandomizationInputs& in, int runs,
                                              std::uint64_t seed, double alpha = 0.05) {
  if (runs <= 0) throw Error("randomization_test: need a positive number of permutations");
  if (in.targets.empty()) throw Error("randomization_test: no targets");
  if (in.distance_pool.empty()) throw Error("randomization_test: empty similarity pool");
  for (const auto& t : in.targets) {
    if (t.pair_id >= in.pairs.size())
      throw Error("randomization_test: target references unknown span pair");
    if (t.n_neighbors == 0)
      throw Error("randomization_test: target with empty neighbor list");
  }

  RandomizationResult res;
  res.runs = runs;
  res.seed = seed;
  res.alpha = alpha;
  res.per_permutation_p.reserve(runs);

  DesignOptions opt = in.design;
  opt.apply_leftover_filter = false;  // permuted walks are not re-filtered

  int significant = 0;
  std::vector<AnalysisRow> rows;
  for (int perm = 0; perm < runs; ++perm) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(perm)));
    rows.clear();
    rows.reserve(in.targets.size());
    for (const auto& t : in.targets) {
      const auto& lex = in.pairs[t.pair_id];
      const auto picks = detail::sample_distinct(
          rng, static_cast<std::uint32_t>(lex.words.size()), t.n_neighbors, t.self_index);
      std::vector<double> dist(t.n_neighbors);
      for (auto& d : dist)
        d = in.distance_pool[rng.below(in.distance_pool.size())];
      std::sort(dist.begin(), dist.end());

      NeighborList nl;
      nl.target = t.row.word;
      nl.entries.resize(t.n_neighbors);
      std::vector<NeighborFreq> freqs(t.n_neighbors);
      const double d1 = dist.front();
      for (std::uint32_t i = 0; i < t.n_neighbors; ++i) {
        auto& e = nl.entries[i];
        e.index = picks[i];
        e.word = lex.words[picks[i]];
        e.cosine_distance = dist[i];
        if (d1 > 0)
          e.normalized_distance = dist[i] / d1 - 1.0;
        else
          e.normalized_distance =
              dist[i] == d1 ? 0.0 : std::numeric_limits<double>::infinity();
        freqs[i] = lex.freqs[picks[i]];
      }

      AnalysisRow row = t.row;
      const CompetitionResult cr = equalize(row.pmw_change, nl, freqs);
      row.equalization_range = cr.equalization_range;
      row.leftover = cr.leftover;
      row.exhausted = cr.exhausted;
      row.leftover_drop = false;
      row.n_equalizers = static_cast<int>(cr.equalizers.size());
      row.nearest_cosine_distance = d1;
      int best = std::numeric_limits<int>::max();
      const std::size_t upto = std::min<std::size_t>(nl.entries.size(), 20);
      for (std::size_t i = 0; i < upto; ++i)
        best = std::min(best, damerau_levenshtein(row.word, nl.entries[i].word));
      row.min_edit_distance = best;
      double pct = 0;
      for (const auto& eq : cr.equalizers) pct = std::max(pct, eq.decrease / eq.f1 * 100.0);
      row.max_decrease_pct = pct;
      rows.push_back(std::move(row));
    }

    const ModelPair mp = fit_models(rows, opt);
    const int adv = mp.full.index_of("advection");
    const double p = mp.full.pvalue(adv);
    res.per_permutation_p.push_back(p);
    if (p < alpha) ++significant;
  }
  res.fraction_significant = static_cast<double>(significant) / static_cast<double>(runs);
  return res;
}

// ---- binary persistence of the inputs ("RND1") ------------------------------

namespace detail {

inline void write_u64b(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_f64b(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_str(std::ofstream& out, const std::string& s) {
  write_u64b(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::uint64_t read_u64b(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline double read_f64b(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline std::string read_str(std::ifstream& in) {
  const auto n = read_u64b(in);
  if (n > (1ull << 24)) throw Error("randomization inputs: corrupt string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace detail

inline void save_randomization_inputs(const RandomizationInputs& in, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write("RND1", 4);
  detail::write_u64b(out, in.pairs.size());
  for (const auto& p : in.pairs) {
    detail::write_u64b(out, p.words.size());
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      detail::write_str(out, p.words[i]);
      detail::write_f64b(out, p.freqs[i].f1);
      detail::write_f64b(out, p.freqs[i].f2);
    }
  }
  detail::write_u64b(out, in.targets.size());
  for (const auto& t : in.targets) {
    detail::write_str(out, t.row.word);
    detail::write_f64b(out, t.row.pmw_change);
    detail::write_f64b(out, t.row.advection);
    detail::write_f64b(out, t.row.peak_z);
    detail::write_u64b(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(t.row.start_unit)));
    detail::write_u64b(out, static_cast<std::uint64_t>(t.row.word_length));
    detail::write_u64b(out, t.row.user_ratio ? 1 : 0);
    detail::write_f64b(out, t.row.user_ratio.value_or(0.0));
    detail::write_u64b(out, t.pair_id);
    detail::write_u64b(out, t.n_neighbors);
    detail::write_u64b(out, t.self_index);
  }
  detail::write_u64b(out, in.distance_pool.size());
  for (double d : in.distance_pool) detail::write_f64b(out, d);
  detail::write_u64b(out, in.design.include_exhausted ? 1 : 0);
  detail::write_u64b(out, in.design.zscore ? 1 : 0);
  if (!out) throw Error("write failed for '" + path + "'");
}

inline RandomizationInputs load_randomization_inputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open randomization inputs '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "RND1")
    throw Error("'" + path + "' is not a randomization-inputs file");
  RandomizationInputs out;
  const auto n_pairs = detail::read_u64b(in);
  out.pairs.resize(n_pairs);
  for (auto& p : out.pairs) {
    const auto n = detail::read_u64b(in);
    p.words.resize(n);
    p.freqs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.words[i] = detail::read_str(in);
      p.freqs[i].f1 = detail::read_f64b(in);
      p.freqs[i].f2 = detail::read_f64b(in);
    }
  }
  const auto n_targets = detail::read_u64b(in);
  out.targets.resize(n_targets);
  for (auto& t : out.targets) {
    t.row.word = detail::read_str(in);
    t.row.pmw_change = detail::read_f64b(in);
    t.row.advection = detail::read_f64b(in);
    t.row.peak_z = detail::read_f64b(in);
    t.row.start_unit = static_cast<int>(static_cast<std::int64_t>(detail::read_u64b(in)));
    t.row.word_length = static_cast<int>(detail::read_u64b(in));
    const bool has_ratio = detail::read_u64b(in) != 0;
    const double ratio = detail::read_f64b(in);
    if (has_ratio) t.row.user_ratio = ratio;
    t.pair_id = static_cast<std::uint32_t>(detail::read_u64b(in));
    t.n_neighbors = static_cast<std::uint32_t>(detail::read_u64b(in));
    t.self_index = static_cast<std::uint32_t>(detail::read_u64b(in));
  }
  const auto n_pool = detail::read_u64b(in);
  out.distance_pool.resize(n_pool);
  for (auto& d : out.distance_pool) d = detail::read_f64b(in);
  out.design.include_exhausted = detail::read_u64b(in) != 0;
  out.design.zscore = detail::read_u64b(in) != 0;
  if (!in) throw Error("'" + path + "': truncated data");
  return out;
}

}  // namespace lexcomp
