#pragma once

// Symmetric windowed co-occurrence counts over a fixed vocabulary, PPMI
// weighting, and a plain-text sparse matrix format for caching.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexcomp/util.hpp"

namespace lexcomp {

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

struct CoocMatrix {
  std::vector<std::string> vocab;  // row/column labels, one id per word
  int window = 0;
  double total = 0;  // grand sum of stored values
  std::vector<SparseRow> rows;       // each sorted by column id
  std::vector<double> row_sums, col_sums;

  std::size_t size() const { return vocab.size(); }

  std::optional<std::uint32_t> index_of(std::string_view w) const {
    build_index();
    auto it = index_.find(std::string(w));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double at(std::uint32_t r, std::uint32_t c) const {
    const auto& row = rows.at(r);
    auto it = std::lower_bound(row.begin(), row.end(), c,
                               [](const auto& p, std::uint32_t col) { return p.first < col; });
    return (it != row.end() && it->first == c) ? it->second : 0.0;
  }

 private:
  void build_index() const {
    if (index_.size() == vocab.size()) return;
    index_.clear();
    index_.reserve(vocab.size());
    for (std::uint32_t i = 0; i < vocab.size(); ++i) index_.emplace(vocab[i], i);
  }
  mutable std::unordered_map<std::string, std::uint32_t> index_;
};

// Accumulates symmetric window co-occurrences for documents given as local
// vocabulary ids (kOov marks tokens outside the vocabulary: they occupy
// window positions but contribute no counts).
class CoocBuilder {
 public:
  static constexpr std::uint32_t kOov = 0xffffffffu;

  // `dense_limit`: largest vocabulary for which a dense count buffer is used;
  // beyond it a sort-based accumulator keeps memory proportional to data.
  CoocBuilder(std::vector<std::string> vocab, int window, std::size_t dense_limit = 6500)
      : vocab_(std::move(vocab)), window_(window), dense_limit_(dense_limit) {
    if (window_ <= 0) throw Error("CoocBuilder: window must be positive");
    if (vocab_.size() <= dense_limit_)
      dense_.assign(vocab_.size() * vocab_.size(), 0);
  }

  void add_document(std::span<const std::uint32_t> ids) {
    saw_document_ = true;
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (ids[i] == kOov) continue;
      const std::size_t lo = i >= static_cast<std::size_t>(window_) ? i - window_ : 0;
      const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(window_));
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i || ids[j] == kOov) continue;
        bump(ids[i], ids[j]);
      }
    }
  }

  CoocMatrix finish() {
    if (!saw_document_ || vocab_.empty())
      throw Error("co-occurrence build: span has no usable tokens");
    CoocMatrix m;
    m.vocab = std::move(vocab_);
    m.window = window_;
    const std::size_t v = m.vocab.size();
    m.rows.assign(v, {});
    m.row_sums.assign(v, 0.0);
    m.col_sums.assign(v, 0.0);
    if (!dense_.empty()) {
      for (std::size_t r = 0; r < v; ++r) {
        SparseRow row;
        const std::uint64_t* base = dense_.data() + r * v;
        for (std::size_t c = 0; c < v; ++c)
          if (base[c] != 0) row.emplace_back(static_cast<std::uint32_t>(c),
                                             static_cast<double>(base[c]));
        m.rows[r] = std::move(row);
      }
      dense_.clear();
      dense_.shrink_to_fit();
    } else {
      flush_chunk();
      std::sort(sorted_.begin(), sorted_.end());
      std::size_t i = 0;
      while (i < sorted_.size()) {
        std::size_t j = i + 1;
        while (j < sorted_.size() && sorted_[j] == sorted_[i]) ++j;
        const std::uint32_t r = static_cast<std::uint32_t>(sorted_[i] >> 32);
        const std::uint32_t c = static_cast<std::uint32_t>(sorted_[i]);
        m.rows[r].emplace_back(c, static_cast<double>(j - i));
        i = j;
      }
    }
    for (std::size_t r = 0; r < v; ++r)
      for (const auto& [c, val] : m.rows[r]) {
        m.row_sums[r] += val;
        m.col_sums[c] += val;
        m.total += val;
      }
    if (m.total == 0) throw Error("co-occurrence build: no co-occurring pairs in span");
    return m;
  }

 private:
  void bump(std::uint32_t a, std::uint32_t b) {
    if (!dense_.empty()) {
      ++dense_[static_cast<std::size_t>(a) * vocab_.size() + b];
    } else {
      pending_.push_back((static_cast<std::uint64_t>(a) << 32) | b);
      if (pending_.size() >= (1u << 22)) flush_chunk();
    }
  }

  void flush_chunk() {
    // Compress the pending chunk into the sorted accumulator.
    if (pending_.empty()) return;
    sorted_.insert(sorted_.end(), pending_.begin(), pending_.end());
    pending_.clear();
  }

  std::vector<std::string> vocab_;
  int window_;
  std::size_t dense_limit_;
  std::vector<std::uint64_t> dense_;
  std::vector<std::uint64_t> pending_, sorted_;
  bool saw_document_ = false;
};

// Convenience for tests and small inputs: builds the span vocabulary (words
// with at least `min_token_count` occurrences, in first-appearance order)
// and counts co-occurrences over it.
inline CoocMatrix build_cooc(const std::vector<std::vector<std::string>>& docs, int window,
                             std::int64_t min_token_count = 1) {
  std::unordered_map<std::string, std::int64_t> freq;
  std::vector<std::string> order;
  for (const auto& d : docs)
    for (const auto& w : d) {
      auto [it, fresh] = freq.try_emplace(w, 0);
      if (fresh) order.push_back(w);
      ++it->second;
    }
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::uint32_t> ids;
  for (const auto& w : order)
    if (freq[w] >= min_token_count) {
      ids.emplace(w, static_cast<std::uint32_t>(vocab.size()));
      vocab.push_back(w);
    }
  if (vocab.empty()) throw Error("co-occurrence build: no words pass the frequency threshold");
  CoocBuilder builder(std::move(vocab), window);
  std::vector<std::uint32_t> buf;
  for (const auto& d : docs) {
    buf.clear();
    for (const auto& w : d) {
      auto it = ids.find(w);
      buf.push_back(it == ids.end() ? CoocBuilder::kOov : it->second);
    }
    builder.add_document(buf);
  }
  return builder.finish();
}

namespace detail {

inline double ppmi_cell(double count, double row_sum, double col_sum, double total) {
  // log2( P(w,c) / (P(w) P(c)) ) clamped at zero; inputs are raw counts.
  const double v = std::log2(count * total / (row_sum * col_sum));
  return v > 0.0 ? v : 0.0;
}

}  // namespace detail

// PPMI weight for one row of a count matrix (cells with non-positive PMI are
// dropped, preserving sparsity).
inline SparseRow ppmi_row(const CoocMatrix& counts, std::uint32_t row) {
  SparseRow out;
  out.reserve(counts.rows.at(row).size());
  for (const auto& [c, cnt] : counts.rows[row]) {
    const double v = detail::ppmi_cell(cnt, counts.row_sums[row], counts.col_sums[c], counts.total);
    if (v > 0.0) out.emplace_back(c, v);
  }
  return out;
}

// Full PPMI transform; marginals of the result are sums of PPMI weights.
inline CoocMatrix ppmi(const CoocMatrix& counts) {
  if (counts.total <= 0) throw Error("ppmi: empty count matrix");
  CoocMatrix m;
  m.vocab = counts.vocab;
  m.window = counts.window;
  const std::size_t v = counts.size();
  m.rows.resize(v);
  m.row_sums.assign(v, 0.0);
  m.col_sums.assign(v, 0.0);
  for (std::uint32_t r = 0; r < v; ++r) {
    m.rows[r] = ppmi_row(counts, r);
    for (const auto& [c, val] : m.rows[r]) {
      m.row_sums[r] += val;
      m.col_sums[c] += val;
      m.total += val;
    }
  }
  return m;
}

// ---- sparse matrix cache files -------------------------------------------
// Line 1: rows cols nnz window; then one "row col value" triple per line
// (0-based ids); vocabulary in a sidecar file, one word per line.

inline void save_matrix(const CoocMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  std::size_t nnz = 0;
  for (const auto& r : m.rows) nnz += r.size();
  out << m.size() << ' ' << m.size() << ' ' << nnz << ' ' << m.window << '\n';
  for (std::uint32_t r = 0; r < m.rows.size(); ++r)
    for (const auto& [c, val] : m.rows[r])
      out << r << ' ' << c << ' ' << fmt_double(val) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
  std::ofstream vout(path + ".vocab", std::ios::binary);
  if (!vout) throw Error("cannot write '" + path + ".vocab'");
  for (const auto& w : m.vocab) vout << w << '\n';
  if (!vout) throw Error("write failed for '" + path + ".vocab'");
}

inline CoocMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix '" + path + "'");
  CoocMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw Error("matrix '" + path + "' is empty");
  {
    const auto parts = split(trim(line), ' ');
    if (parts.size() != 4) throw Error("matrix '" + path + "': bad header");
    const auto rows = to_int64(parts[0], "matrix rows");
    if (rows != to_int64(parts[1], "matrix cols"))
      throw Error("matrix '" + path + "': must be square");
    m.window = static_cast<int>(to_int64(parts[3], "matrix window"));
    m.rows.assign(static_cast<std::size_t>(rows), {});
    m.row_sums.assign(static_cast<std::size_t>(rows), 0.0);
    m.col_sums.assign(static_cast<std::size_t>(rows), 0.0);
  }
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto parts = split(t, ' ');
    if (parts.size() != 3)
      throw Error(path + ":" + std::to_string(line_no) + ": want 'row col value'");
    const auto r = static_cast<std::size_t>(to_int64(parts[0], "matrix row"));
    const auto c = static_cast<std::uint32_t>(to_int64(parts[1], "matrix col"));
    const double val = to_double(parts[2], "matrix value");
    if (r >= m.rows.size() || c >= m.rows.size())
      throw Error(path + ":" + std::to_string(line_no) + ": index out of bounds");
    m.rows[r].emplace_back(c, val);
    m.row_sums[r] += val;
    m.col_sums[c] += val;
    m.total += val;
  }
  for (auto& row : m.rows)
    std::sort(row.begin(), row.end());
  std::ifstream vin(path + ".vocab");
  if (!vin) throw Error("cannot open matrix vocabulary '" + path + ".vocab'");
  while (std::getline(vin, line)) {
    const auto t = trim(line);
    if (!t.empty()) m.vocab.emplace_back(t);
  }
  if (m.vocab.size() != m.rows.size())
    throw Error("matrix '" + path + "': vocabulary size mismatch");
  return m;
}

}  // namespace lexcomp
