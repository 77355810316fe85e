#pragma once

// Target selection: scan every word and every adjacent span pair for the
// largest smoothed log change that clears the frequency, coverage, burst
// and (optionally) account-dispersion filters.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lexcomp/counts.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

enum class Direction { increase, decrease };

struct SelectionConfig {
  int span_len = 10;
  double min_log_change = 2.0;
  std::int64_t min_t2_count = 200;
  double min_t2_coverage = 0.8;
  double max_peak_z = 10.0;
  Direction direction = Direction::increase;
  bool use_account_filter = false;  // ratio of distinct authors to occurrences
  double min_user_ratio = 0.75;
};

struct TargetRecord {
  std::string word;
  std::uint32_t word_id = 0;
  SpanStats t1, t2;
  double log_change = 0;  // smoothed ln(f2/f1); negative in decrease mode
  double pmw_change = 0;  // f2_pmw - f1_pmw
  int start_unit = 0;     // first unit of t2
  double peak_z = 0;
  int word_length = 0;    // codepoints
  std::optional<double> user_ratio;
};

// Distinct-author counts per (word, unit); present only for corpora whose
// documents carry author ids.
class AuthorStats {
 public:
  void ensure_word(std::uint32_t word_id) {
    if (word_id >= rows_.size()) rows_.resize(word_id + 1);
  }

  void add(std::uint32_t word_id, int unit, std::int64_t distinct) {
    ensure_word(word_id);
    rows_[word_id].emplace_back(unit, distinct);
  }

  void seal() {
    for (auto& row : rows_) std::sort(row.begin(), row.end());
  }

  std::int64_t distinct(std::uint32_t word_id, int unit) const {
    if (word_id >= rows_.size()) return 0;
    const auto& row = rows_[word_id];
    auto it = std::lower_bound(row.begin(), row.end(), unit,
                               [](const auto& p, int u) { return p.first < u; });
    return (it != row.end() && it->first == unit) ? it->second : 0;
  }

  std::size_t n_words() const { return rows_.size(); }

 private:
  std::vector<std::vector<std::pair<int, std::int64_t>>> rows_;
};

// Ratio of distinct authors to occurrences for one unit; 1 means every
// occurrence came from a different author.
inline double account_dispersion_ratio(std::int64_t distinct_authors, std::int64_t occurrences) {
  if (occurrences <= 0) throw Error("account_dispersion_ratio: no occurrences");
  if (distinct_authors <= 0 || distinct_authors > occurrences)
    throw Error("account_dispersion_ratio: invalid author count");
  return static_cast<double>(distinct_authors) / static_cast<double>(occurrences);
}

// Median per-unit dispersion over the units of `span` where the word occurs.
inline double median_account_dispersion(const CountsTable& table, const AuthorStats& authors,
                                        std::uint32_t word_id, UnitSpan span) {
  std::vector<double> ratios;
  for (int u = span.first; u <= span.last; ++u) {
    const std::int64_t occ = table.count(word_id, u);
    if (occ <= 0) continue;
    ratios.push_back(account_dispersion_ratio(authors.distinct(word_id, u), occ));
  }
  if (ratios.empty()) throw Error("median_account_dispersion: word absent from span");
  return median(std::move(ratios));
}

namespace detail {

// Per-unit pmw values over [t1.first, t2.last] for the burst filter.
inline std::vector<double> concat_pmw_series(const CountsTable& table, std::uint32_t word_id,
                                             UnitSpan t1, UnitSpan t2) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(t2.last - t1.first + 1));
  for (int u = t1.first; u <= t2.last; ++u) {
    const std::int64_t tok = table.totals().at(u);
    out.push_back(tok > 0 ? static_cast<double>(table.count(word_id, u)) * 1e6 /
                                static_cast<double>(tok)
                          : 0.0);
  }
  return out;
}

}  // namespace detail

// Scans all words and all adjacent same-length span pairs inside the unit
// range; keeps, per qualifying word, the boundary with the largest |log
// change|. Records come out in word-id order.
inline std::vector<TargetRecord> find_targets(const CountsTable& table, const Vocabulary& vocab,
                                              const SelectionConfig& cfg,
                                              const AuthorStats* authors = nullptr) {
  const auto& totals = table.totals();
  const int L = cfg.span_len;
  if (L <= 0) throw Error("find_targets: span_len must be positive");
  if (totals.unit_max() - totals.unit_min() + 1 < 2 * L)
    throw Error("find_targets: unit range shorter than two spans of length " +
                std::to_string(L));
  if (cfg.use_account_filter && authors == nullptr)
    throw Error("find_targets: account filter requested but author data missing");

  const bool increase = cfg.direction == Direction::increase;
  std::vector<TargetRecord> out;

  for (std::uint32_t w = 0; w < vocab.size(); ++w) {
    std::optional<TargetRecord> best;
    // Boundary u: t1 = [u-L, u-1], t2 = [u, u+L-1].
    for (int u = totals.unit_min() + L; u + L - 1 <= totals.unit_max(); ++u) {
      const UnitSpan s1{u - L, u - 1};
      const UnitSpan s2{u, u + L - 1};
      const SpanStats st1 = span_stats(table, w, s1);
      const SpanStats st2 = span_stats(table, w, s2);
      const double lc = log_change(st1.f_pmw, st2.f_pmw, smoothing_pmw(totals.in_span(s1)),
                                   smoothing_pmw(totals.in_span(s2)));
      // Thresholds mirror onto the high-frequency side: t2 for rises, t1 for falls.
      const SpanStats& high = increase ? st2 : st1;
      if (increase ? lc < cfg.min_log_change : lc > -cfg.min_log_change) continue;
      if (high.raw_count < cfg.min_t2_count) continue;
      if (high.coverage < cfg.min_t2_coverage) continue;
      const auto series = detail::concat_pmw_series(table, w, s1, s2);
      const double pz = max_peak_z(series);
      if (pz > cfg.max_peak_z) continue;

      std::optional<double> ratio;
      if (authors != nullptr && high.raw_count > 0)
        ratio = median_account_dispersion(table, *authors, w, high.span);
      if (cfg.use_account_filter && (!ratio || *ratio < cfg.min_user_ratio)) continue;

      const bool better = !best || (increase ? lc > best->log_change : lc < best->log_change);
      if (!better) continue;
      TargetRecord rec;
      rec.word = vocab.word(w);
      rec.word_id = w;
      rec.t1 = st1;
      rec.t2 = st2;
      rec.log_change = lc;
      rec.pmw_change = st2.f_pmw - st1.f_pmw;
      rec.start_unit = s2.first;
      rec.peak_z = pz;
      rec.word_length = static_cast<int>(utf8_length(rec.word));
      rec.user_ratio = ratio;
      best = std::move(rec);
    }
    if (best) out.push_back(std::move(*best));
  }
  return out;
}

// ---- targets CSV (stable column set; user_ratio empty when unavailable)

inline const char* kTargetsCsvHeader =
    "word,t1_start,t1_end,t2_start,t2_end,f1_pmw,f2_pmw,log_change,pmw_change,"
    "coverage_t2,peak_z,user_ratio";

inline void save_targets_csv(const std::vector<TargetRecord>& targets, const std::string& path,
                             const std::string& stamp = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!stamp.empty()) out << "# " << stamp << '\n';
  out << kTargetsCsvHeader << '\n';
  for (const auto& t : targets) {
    out << t.word << ',' << t.t1.span.first << ',' << t.t1.span.last << ',' << t.t2.span.first
        << ',' << t.t2.span.last << ',' << fmt_double(t.t1.f_pmw) << ',' << fmt_double(t.t2.f_pmw)
        << ',' << fmt_double(t.log_change) << ',' << fmt_double(t.pmw_change) << ','
        << fmt_double(t.t2.coverage) << ',' << fmt_double(t.peak_z) << ','
        << (t.user_ratio ? fmt_double(*t.user_ratio) : std::string()) << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace lexcomp
