#pragma once

// Truncated SVD of a sparse non-negative matrix by seeded randomized
// subspace iteration: alternate A / A^T projections with thin-QR
// re-orthonormalization, monitoring the Ritz singular values until they
// stall, then extract factors from a small dense SVD.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lexcomp/cooc.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

struct SvdOptions {
  int oversample = 24;          // extra subspace columns beyond k
  int max_iterations = 4000;
  double stall_tolerance = 1e-14;  // relative Ritz-value drift counted as "no change"
  int stall_window = 8;            // consecutive stalled iterations before stopping
  std::uint64_t seed = 0x5eedULL;
  // Matrices with at most this many cells are densified for fast products.
  std::size_t dense_cells_limit = 9'000'000;
};

struct SvdResult {
  Eigen::MatrixXd u;  // rows x k, orthonormal columns (zeroed beyond rank)
  Eigen::VectorXd s;  // k, non-increasing, zero beyond rank
  Eigen::MatrixXd v;  // cols x k
  int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd thin_q(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

// Shared iteration body for dense or sparse A.
template <typename Mat>
SvdResult subspace_svd(const Mat& a, int k, const SvdOptions& opt) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (k <= 0) throw Error("truncated_svd: k must be positive");
  if (k > std::min(rows, cols))
    throw Error("truncated_svd: k exceeds matrix dimensions");
  const Eigen::Index b = std::min<Eigen::Index>(std::min(rows, cols),
                                                static_cast<Eigen::Index>(k) + opt.oversample);

  Rng rng(opt.seed);
  Eigen::MatrixXd q(cols, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) q(i, j) = rng.normal();
  q = thin_q(q);

  Eigen::VectorXd prev = Eigen::VectorXd::Zero(b);
  Eigen::MatrixXd y;
  int stalled = 0;
  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    y = a * q;  // rows x b
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd qy = qr.householderQ() * Eigen::MatrixXd::Identity(rows, b);
    Eigen::MatrixXd r = qr.matrixQR().topRows(b).template triangularView<Eigen::Upper>();
    // Ritz singular values of A restricted to span(q): singular values of R.
    Eigen::BDCSVD<Eigen::MatrixXd> rsvd(r);
    const Eigen::VectorXd ritz = rsvd.singularValues();
    const double scale = std::max(ritz(0), 1e-300);
    double drift = 0;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(ritz.size())); ++i)
      drift = std::max(drift, std::abs(ritz(i) - prev(i)) / scale);
    prev.head(ritz.size()) = ritz;
    if (ritz(0) == 0.0) break;  // zero matrix
    if (drift < opt.stall_tolerance) {
      if (++stalled >= opt.stall_window) break;
    } else {
      stalled = 0;
    }
    q = thin_q(a.transpose() * qy);  // cols x b
  }

  // Factor extraction from the final projection.
  y = a * q;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult res;
  res.iterations = iter;
  res.u = svd.matrixU().leftCols(k);
  res.s = svd.singularValues().head(k);
  res.v = q * svd.matrixV().leftCols(k);
  // Zero out numerically null directions (k beyond the true rank).
  const double cutoff = res.s(0) * 1e-12;
  for (int i = 0; i < k; ++i) {
    if (res.s(i) <= cutoff) {
      res.s(i) = 0.0;
      res.u.col(i).setZero();
      res.v.col(i).setZero();
    }
  }
  return res;
}

// When the block would span the whole space, iterating is pointless: a single
// dense factorization is exact and cheaper.
inline SvdResult direct_svd(const Eigen::MatrixXd& a, int k) {
  if (k <= 0) throw Error("truncated_svd: k must be positive");
  if (k > std::min(a.rows(), a.cols()))
    throw Error("truncated_svd: k exceeds matrix dimensions");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult res;
  res.iterations = 0;
  res.u = svd.matrixU().leftCols(k);
  res.s = svd.singularValues().head(k);
  res.v = svd.matrixV().leftCols(k);
  const double cutoff = res.s(0) * 1e-12;
  for (int i = 0; i < k; ++i) {
    if (res.s(i) <= cutoff) {
      res.s(i) = 0.0;
      res.u.col(i).setZero();
      res.v.col(i).setZero();
    }
  }
  return res;
}

}  // namespace detail

inline SvdResult truncated_svd(const Eigen::SparseMatrix<double>& a, int k,
                               const SvdOptions& opt = {}) {
  const std::size_t cells = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(a.cols());
  if (cells <= opt.dense_cells_limit) {
    const Eigen::MatrixXd dense(a);
    if (static_cast<Eigen::Index>(k) + opt.oversample >= std::min(dense.rows(), dense.cols()))
      return detail::direct_svd(dense, k);
    return detail::subspace_svd(dense, k, opt);
  }
  return detail::subspace_svd(a, k, opt);
}

inline Eigen::SparseMatrix<double> to_eigen_sparse(const CoocMatrix& m) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trips;
  std::size_t nnz = 0;
  for (const auto& r : m.rows) nnz += r.size();
  trips.reserve(nnz);
  for (std::uint32_t r = 0; r < m.rows.size(); ++r)
    for (const auto& [c, val] : m.rows[r])
      trips.emplace_back(static_cast<int>(r), static_cast<int>(c), val);
  Eigen::SparseMatrix<double> sm(static_cast<int>(m.size()), static_cast<int>(m.size()));
  sm.setFromTriplets(trips.begin(), trips.end());
  return sm;
}

inline SvdResult truncated_svd(const CoocMatrix& m, int k, const SvdOptions& opt = {}) {
  return truncated_svd(to_eigen_sparse(m), k, opt);
}

}  // namespace lexcomp
