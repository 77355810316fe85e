#pragma once

// Latent semantic space: dimensionality-reduced word vectors from a PPMI
// matrix, fold-in of out-of-span rows, and nearest-neighbor retrieval with
// prevalence filtering and normalized distances.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "lexcomp/cooc.hpp"
#include "lexcomp/svd.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

struct SemanticSpace {
  std::vector<std::string> vocab;
  int k = 0;
  Eigen::MatrixXd u;        // n x k
  Eigen::VectorXd s;        // k
  Eigen::MatrixXd v;        // n x k (right factor, used for fold-in)
  Eigen::MatrixXd vectors;  // n x k word vectors: U * diag(S)

  std::uint32_t npos = 0xffffffffu;
  std::uint32_t index_of(std::string_view w) const {
    build_index();
    auto it = index_.find(std::string(w));
    return it == index_.end() ? npos : it->second;
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

// SVD of the PPMI matrix; word vectors are the left factor scaled by the
// singular values (row i of U Sigma).
inline SemanticSpace train_lsa(const CoocMatrix& weights, int k, std::uint64_t seed,
                               SvdOptions opt = {}) {
  if (weights.size() == 0) throw Error("train_lsa: empty matrix");
  if (k <= 0 || static_cast<std::size_t>(k) > weights.size())
    throw Error("train_lsa: k must be in [1, vocabulary size]");
  opt.seed = seed;
  SvdResult svd = truncated_svd(weights, k, opt);
  SemanticSpace sp;
  sp.vocab = weights.vocab;
  sp.k = k;
  sp.u = std::move(svd.u);
  sp.s = std::move(svd.s);
  sp.v = std::move(svd.v);
  sp.vectors = sp.u * sp.s.asDiagonal();
  return sp;
}

// Projects a PPMI row expressed over the space's vocabulary into the latent
// space: r V (the position the word would get without retraining).
inline Eigen::VectorXd fold_in(const SemanticSpace& sp, const SparseRow& row) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.k);
  bool any = false;
  for (const auto& [c, val] : row) {
    if (c >= sp.vocab.size()) throw Error("fold_in: column outside vocabulary");
    if (val == 0.0) continue;
    any = true;
    out.noalias() += val * sp.v.row(c).transpose();
  }
  if (!any) throw Error("fold_in: row has no usable context weights");
  return out;
}

struct NeighborEntry {
  std::uint32_t index = 0;  // into the space vocabulary
  std::string word;
  double cosine_distance = 0;      // 1 - cosine similarity
  double normalized_distance = 0;  // d/d1 - 1 (nearest neighbor = 0)
};

struct NeighborList {
  std::string target;
  std::vector<NeighborEntry> entries;  // ascending cosine distance
};

// All space words ranked by cosine distance to `target_vector`, keeping only
// words with `coverage >= min_coverage` and outside `exclude`; ties broken by
// higher `tie_freq`, then lexicographically. Zero-norm word vectors are
// unrankable and skipped.
inline NeighborList neighbors(const SemanticSpace& sp, const Eigen::VectorXd& target_vector,
                              std::string_view target_word, std::span<const double> coverage,
                              std::span<const double> tie_freq,
                              const std::unordered_set<std::string>& exclude,
                              double min_coverage = 0.5) {
  if (coverage.size() != sp.vocab.size() || tie_freq.size() != sp.vocab.size())
    throw Error("neighbors: coverage/frequency not aligned to vocabulary");
  const double tnorm = target_vector.norm();
  if (!(tnorm > 0)) throw Error("neighbors: target vector is zero");

  NeighborList out;
  out.target = std::string(target_word);
  out.entries.reserve(sp.vocab.size());
  for (std::uint32_t i = 0; i < sp.vocab.size(); ++i) {
    if (sp.vocab[i] == target_word) continue;
    if (coverage[i] < min_coverage) continue;
    if (exclude.count(sp.vocab[i])) continue;
    const double wnorm = sp.vectors.row(i).norm();
    if (!(wnorm > 0)) continue;
    const double cos = sp.vectors.row(i).dot(target_vector) / (wnorm * tnorm);
    NeighborEntry e;
    e.index = i;
    e.word = sp.vocab[i];
    e.cosine_distance = 1.0 - cos;
    out.entries.push_back(std::move(e));
  }
  if (out.entries.empty()) throw Error("neighbors: no candidates survive the filters");

  std::sort(out.entries.begin(), out.entries.end(),
            [&](const NeighborEntry& a, const NeighborEntry& b) {
              if (a.cosine_distance != b.cosine_distance)
                return a.cosine_distance < b.cosine_distance;
              if (tie_freq[a.index] != tie_freq[b.index])
                return tie_freq[a.index] > tie_freq[b.index];
              return a.word < b.word;
            });

  const double d1 = out.entries.front().cosine_distance;
  for (auto& e : out.entries) {
    if (d1 > 0)
      e.normalized_distance = e.cosine_distance / d1 - 1.0;
    else
      e.normalized_distance =
          e.cosine_distance == d1 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return out;
}

// ---- binary persistence ----------------------------------------------------
// Layout: magic "LSA1", then u64 {n, k}, then U (n*k), S (k), V (n*k) as
// row-major little-endian doubles. Vocabulary in sidecar "<path>.vocab".

namespace detail {

inline void write_f64(std::ofstream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_f64(std::ifstream& in, double* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace detail

inline void save_space(const SemanticSpace& sp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write("LSA1", 4);
  detail::write_u64(out, sp.vocab.size());
  detail::write_u64(out, static_cast<std::uint64_t>(sp.k));
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor u = sp.u;
  const RowMajor v = sp.v;
  detail::write_f64(out, u.data(), static_cast<std::size_t>(u.size()));
  detail::write_f64(out, sp.s.data(), static_cast<std::size_t>(sp.s.size()));
  detail::write_f64(out, v.data(), static_cast<std::size_t>(v.size()));
  if (!out) throw Error("write failed for '" + path + "'");
  std::ofstream vout(path + ".vocab", std::ios::binary);
  if (!vout) throw Error("cannot write '" + path + ".vocab'");
  for (const auto& w : sp.vocab) vout << w << '\n';
  if (!vout) throw Error("write failed for '" + path + ".vocab'");
}

inline SemanticSpace load_space(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open space '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "LSA1")
    throw Error("'" + path + "' is not a semantic-space file");
  const std::uint64_t n = detail::read_u64(in);
  const std::uint64_t k = detail::read_u64(in);
  if (!in || n == 0 || k == 0 || k > n)
    throw Error("'" + path + "': corrupt header");
  SemanticSpace sp;
  sp.k = static_cast<int>(k);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor u(n, k), v(n, k);
  sp.s.resize(static_cast<Eigen::Index>(k));
  detail::read_f64(in, u.data(), n * k);
  detail::read_f64(in, sp.s.data(), k);
  detail::read_f64(in, v.data(), n * k);
  if (!in) throw Error("'" + path + "': truncated factor data");
  sp.u = u;
  sp.v = v;
  sp.vectors = sp.u * sp.s.asDiagonal();
  std::ifstream vin(path + ".vocab");
  if (!vin) throw Error("cannot open space vocabulary '" + path + ".vocab'");
  std::string line;
  while (std::getline(vin, line)) {
    const auto t = trim(line);
    if (!t.empty()) sp.vocab.emplace_back(t);
  }
  if (sp.vocab.size() != n) throw Error("'" + path + "': vocabulary size mismatch");
  return sp;
}

}  // namespace lexcomp
