#pragma once

// Per-unit count bookkeeping and the frequency arithmetic built on it:
// span aggregation, smoothed log change, and leave-one-out peak z-scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexcomp/util.hpp"

namespace lexcomp {

struct UnitSpan {
  int first = 0;
  int last = 0;
  int length() const { return last - first + 1; }
  bool contains(int u) const { return u >= first && u <= last; }
  bool operator==(const UnitSpan&) const = default;
};

// Token totals per unit over a contiguous unit range.
class UnitTotals {
 public:
  UnitTotals() : UnitTotals(0, 0) {}
  UnitTotals(int unit_min, int unit_max) : unit_min_(unit_min), unit_max_(unit_max) {
    if (unit_max < unit_min) throw Error("unit range is empty");
    tokens_.assign(static_cast<std::size_t>(unit_max - unit_min + 1), 0);
  }

  int unit_min() const { return unit_min_; }
  int unit_max() const { return unit_max_; }

  void add(int unit, std::int64_t n) { tokens_[index(unit)] += n; }

  std::int64_t at(int unit) const { return tokens_[index(unit)]; }

  std::int64_t in_span(UnitSpan s) const {
    check_span(s);
    std::int64_t total = 0;
    for (int u = s.first; u <= s.last; ++u) total += at(u);
    return total;
  }

  void check_span(UnitSpan s) const {
    if (s.last < s.first) throw Error("span is empty");
    if (s.first < unit_min_ || s.last > unit_max_)
      throw Error("span [" + std::to_string(s.first) + "," + std::to_string(s.last) +
                  "] outside unit range [" + std::to_string(unit_min_) + "," +
                  std::to_string(unit_max_) + "]");
  }

  std::int64_t grand_total() const {
    std::int64_t t = 0;
    for (auto v : tokens_) t += v;
    return t;
  }

 private:
  std::size_t index(int unit) const {
    if (unit < unit_min_ || unit > unit_max_)
      throw Error("unit " + std::to_string(unit) + " outside range");
    return static_cast<std::size_t>(unit - unit_min_);
  }

  int unit_min_ = 0;
  int unit_max_ = 0;
  std::vector<std::int64_t> tokens_;
};

// String <-> dense id mapping in first-appearance order.
class Vocabulary {
 public:
  std::uint32_t add_or_get(std::string_view w) {
    auto it = index_.find(std::string(w));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(words_.size());
    words_.emplace_back(w);
    index_.emplace(words_.back(), id);
    return id;
  }

  // Returns id or UINT32_MAX when absent.
  static constexpr std::uint32_t npos = 0xffffffffu;
  std::uint32_t find(std::string_view w) const {
    auto it = index_.find(std::string(w));
    return it == index_.end() ? npos : it->second;
  }

  const std::string& word(std::uint32_t id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// One word's occurrence profile across units (only non-zero units stored).
struct WordSeries {
  std::string word;
  std::vector<std::pair<int, std::int64_t>> counts;  // (unit, count>0), sorted by unit

  std::int64_t count_at(int unit) const {
    auto it = std::lower_bound(counts.begin(), counts.end(), unit,
                               [](const auto& p, int u) { return p.first < u; });
    return (it != counts.end() && it->first == unit) ? it->second : 0;
  }

  double pmw_at(int unit, const UnitTotals& totals) const {
    const std::int64_t t = totals.at(unit);
    return t > 0 ? static_cast<double>(count_at(unit)) * 1e6 / static_cast<double>(t) : 0.0;
  }
};

// Sparse per-word, per-unit counts plus the shared unit totals.
class CountsTable {
 public:
  CountsTable() = default;
  CountsTable(int unit_min, int unit_max) : totals_(unit_min, unit_max) {}

  void ensure_word(std::uint32_t word_id) {
    if (word_id >= rows_.size()) rows_.resize(word_id + 1);
  }

  // Count `n` occurrences of `word_id` in `unit`; also grows unit totals.
  void add(std::uint32_t word_id, int unit, std::int64_t n = 1) {
    ensure_word(word_id);
    auto& row = rows_[word_id];
    if (!row.empty() && row.back().first == unit)
      row.back().second += n;
    else
      row.emplace_back(unit, n);
    totals_.add(unit, n);
    sealed_ = false;
  }

  // Sort rows by unit and merge duplicate unit entries. Must be called after
  // the last add() and before any query.
  void seal() {
    for (auto& row : rows_) {
      if (std::is_sorted(row.begin(), row.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; })) {
        bool dup = false;
        for (std::size_t i = 1; i < row.size(); ++i)
          if (row[i].first == row[i - 1].first) {
            dup = true;
            break;
          }
        if (!dup) continue;
      }
      std::sort(row.begin(), row.end());
      std::vector<std::pair<int, std::int64_t>> merged;
      merged.reserve(row.size());
      for (const auto& [u, c] : row) {
        if (!merged.empty() && merged.back().first == u)
          merged.back().second += c;
        else
          merged.emplace_back(u, c);
      }
      row = std::move(merged);
    }
    sealed_ = true;
  }

  std::size_t n_words() const { return rows_.size(); }
  const UnitTotals& totals() const { return totals_; }
  UnitTotals& totals() { return totals_; }

  const std::vector<std::pair<int, std::int64_t>>& row(std::uint32_t word_id) const {
    check_sealed();
    return rows_.at(word_id);
  }

  std::int64_t count(std::uint32_t word_id, int unit) const {
    check_sealed();
    if (word_id >= rows_.size()) return 0;
    const auto& row = rows_[word_id];
    auto it = std::lower_bound(row.begin(), row.end(), unit,
                               [](const auto& p, int u) { return p.first < u; });
    return (it != row.end() && it->first == unit) ? it->second : 0;
  }

  std::int64_t span_count(std::uint32_t word_id, UnitSpan s) const {
    check_sealed();
    totals_.check_span(s);
    if (word_id >= rows_.size()) return 0;
    std::int64_t total = 0;
    for_span(word_id, s, [&](int, std::int64_t c) { total += c; });
    return total;
  }

  int span_units_present(std::uint32_t word_id, UnitSpan s) const {
    check_sealed();
    totals_.check_span(s);
    if (word_id >= rows_.size()) return 0;
    int n = 0;
    for_span(word_id, s, [&](int, std::int64_t) { ++n; });
    return n;
  }

  WordSeries series_for(std::uint32_t word_id, const Vocabulary& vocab) const {
    check_sealed();
    WordSeries ws;
    ws.word = vocab.word(word_id);
    if (word_id < rows_.size()) ws.counts = rows_[word_id];
    return ws;
  }

 private:
  template <typename F>
  void for_span(std::uint32_t word_id, UnitSpan s, F&& f) const {
    const auto& row = rows_[word_id];
    auto it = std::lower_bound(row.begin(), row.end(), s.first,
                               [](const auto& p, int u) { return p.first < u; });
    for (; it != row.end() && it->first <= s.last; ++it) f(it->first, it->second);
  }

  void check_sealed() const {
    if (!sealed_) throw Error("CountsTable: seal() must be called before queries");
  }

  std::vector<std::vector<std::pair<int, std::int64_t>>> rows_;
  UnitTotals totals_;
  bool sealed_ = true;
};

struct SpanStats {
  UnitSpan span;
  double f_pmw = 0;          // aggregate: sum of counts / sum of tokens * 1e6
  std::int64_t raw_count = 0;
  double coverage = 0;       // fraction of units in span with count > 0
};

inline SpanStats span_stats_from(std::int64_t raw_count, int units_present, UnitSpan span,
                                 std::int64_t span_tokens) {
  SpanStats st;
  st.span = span;
  st.raw_count = raw_count;
  st.f_pmw = span_tokens > 0
                 ? static_cast<double>(raw_count) * 1e6 / static_cast<double>(span_tokens)
                 : 0.0;
  st.coverage = static_cast<double>(units_present) / static_cast<double>(span.length());
  return st;
}

inline SpanStats span_stats(const CountsTable& table, std::uint32_t word_id, UnitSpan span) {
  return span_stats_from(table.span_count(word_id, span),
                         table.span_units_present(word_id, span), span,
                         table.totals().in_span(span));
}

inline SpanStats span_stats(const WordSeries& series, UnitSpan span, const UnitTotals& totals) {
  totals.check_span(span);
  std::int64_t raw = 0;
  int present = 0;
  for (const auto& [u, c] : series.counts)
    if (span.contains(u)) {
      raw += c;
      ++present;
    }
  return span_stats_from(raw, present, span, totals.in_span(span));
}

// Per-million-word equivalent of one occurrence in the span (the smoothing
// constant for log change when a frequency is zero).
inline double smoothing_pmw(std::int64_t span_tokens) {
  if (span_tokens <= 0) throw Error("smoothing_pmw: span has no tokens");
  return 1e6 / static_cast<double>(span_tokens);
}

// Symmetric log frequency ratio with additive smoothing applied only to
// zero frequencies. Zero in both spans maps to zero.
inline double log_change(double f1, double f2, double s1, double s2) {
  if (f1 < 0 || f2 < 0 || s1 < 0 || s2 < 0) throw Error("log_change: negative input");
  if (f1 == 0.0 && f2 == 0.0) return 0.0;
  const double a = f1 == 0.0 ? s1 : f1;
  const double b = f2 == 0.0 ? s2 : f2;
  return std::log(b) - std::log(a);
}

// Max over i of (v_i - mean(rest)) / sd(rest) with unbiased sd. A constant
// rest with v on the constant gives 0; off the constant gives +infinity.
inline double max_peak_z(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) throw Error("max_peak_z: need at least 3 values");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += values[j];
    const double mean = sum / static_cast<double>(n - 1);
    double ss = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        const double d = values[j] - mean;
        ss += d * d;
      }
    const double sd = std::sqrt(ss / static_cast<double>(n - 2));
    double z;
    if (sd == 0.0)
      z = values[i] == mean ? 0.0 : std::numeric_limits<double>::infinity();
    else
      z = (values[i] - mean) / sd;
    best = std::max(best, z);
  }
  return best;
}

// ---- persistence: counts as word<TAB>unit<TAB>count, totals as unit<TAB>tokens

inline void save_counts(const CountsTable& table, const Vocabulary& vocab,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (std::uint32_t w = 0; w < table.n_words(); ++w)
    for (const auto& [u, c] : table.row(w))
      out << vocab.word(w) << '\t' << u << '\t' << c << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void save_totals(const UnitTotals& totals, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (int u = totals.unit_min(); u <= totals.unit_max(); ++u)
    out << u << '\t' << totals.at(u) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline UnitTotals load_totals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open totals '" + path + "'");
  std::vector<std::pair<int, std::int64_t>> rows;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2)
      throw Error(path + ":" + std::to_string(line_no) + ": want unit<TAB>token_count");
    rows.emplace_back(static_cast<int>(to_int64(trim(parts[0]), "totals unit")),
                      to_int64(trim(parts[1]), "totals count"));
  }
  if (rows.empty()) throw Error("totals file '" + path + "' is empty");
  int lo = rows[0].first, hi = rows[0].first;
  for (const auto& [u, c] : rows) {
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  UnitTotals totals(lo, hi);
  for (const auto& [u, c] : rows) totals.add(u, c);
  return totals;
}

// Loads counts into `table`/`vocab`; unit range comes from `table`'s totals,
// which must already be constructed (counts do not imply the full range).
inline void load_counts(const std::string& path, CountsTable& table, Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open counts '" + path + "'");
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 3)
      throw Error(path + ":" + std::to_string(line_no) + ": want word<TAB>unit<TAB>count");
    const auto id = vocab.add_or_get(trim(parts[0]));
    table.add(id, static_cast<int>(to_int64(trim(parts[1]), "counts unit")),
              to_int64(trim(parts[2]), "counts value"));
  }
  table.seal();
}

}  // namespace lexcomp
