#pragma once

// Ordinary least squares with classical t-based inference, plus the
// comparative partial R^2 used to quantify one predictor's unique
// contribution (1 - SSE_full / SSE_reduced).

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lexcomp/util.hpp"

namespace lexcomp {

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 3e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value for a t statistic with `df` degrees of freedom:
// P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2).
inline double t_test_pvalue(double t, double df) {
  if (df <= 0) throw Error("t_test_pvalue: degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return detail::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

struct RegressionReport {
  std::vector<std::string> names;  // per design column, intercept included
  Eigen::VectorXd coef, se, tstat, pvalue;
  double r2 = 0, adj_r2 = 0, sse = 0, sst = 0;
  int n = 0;  // observations
  int p = 0;  // predictors, intercept excluded

  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }
};

// Fits y = X b. X must include the intercept column; `names` labels every
// column of X. Collinear designs are refused, naming the dependent columns.
inline RegressionReport ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::vector<std::string> names) {
  const int n = static_cast<int>(x.rows());
  const int cols = static_cast<int>(x.cols());
  if (static_cast<int>(names.size()) != cols)
    throw Error("ols_fit: names not aligned to design columns");
  if (y.size() != n) throw Error("ols_fit: response not aligned to design rows");
  if (n <= cols)
    throw Error("ols_fit: need more observations (" + std::to_string(n) +
                ") than design columns (" + std::to_string(cols) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < cols) {
    std::string culprits;
    const auto perm = qr.colsPermutation().indices();
    for (int i = qr.rank(); i < cols; ++i) {
      if (!culprits.empty()) culprits += ", ";
      culprits += names[static_cast<std::size_t>(perm(i))];
    }
    throw Error("ols_fit: design is rank-deficient; collinear column(s): " + culprits);
  }

  RegressionReport rep;
  rep.names = std::move(names);
  rep.n = n;
  rep.p = cols - 1;
  rep.coef = qr.solve(y);
  const Eigen::VectorXd resid = y - x * rep.coef;
  rep.sse = resid.squaredNorm();
  const double ymean = y.mean();
  rep.sst = (y.array() - ymean).square().sum();
  rep.r2 = rep.sst > 0 ? 1.0 - rep.sse / rep.sst : 0.0;
  const int df = n - cols;  // n - p - 1
  rep.adj_r2 = rep.sst > 0 ? 1.0 - (1.0 - rep.r2) * static_cast<double>(n - 1) / df : 0.0;

  const double sigma2 = rep.sse / df;
  const Eigen::MatrixXd cov = sigma2 * (x.transpose() * x).inverse();
  rep.se.resize(cols);
  rep.tstat.resize(cols);
  rep.pvalue.resize(cols);
  for (int i = 0; i < cols; ++i) {
    rep.se(i) = std::sqrt(cov(i, i));
    rep.tstat(i) = rep.se(i) > 0 ? rep.coef(i) / rep.se(i)
                                 : std::numeric_limits<double>::quiet_NaN();
    rep.pvalue(i) = t_test_pvalue(rep.tstat(i), df);
  }
  return rep;
}

struct PartialR2 {
  double comparative = 0;   // 1 - SSE_full / SSE_reduced
  double adj_difference = 0;  // adj R^2 (full) - adj R^2 (reduced)
};

// Unique contribution of the predictors present in `full` but not `reduced`.
// Both fits must come from the same rows.
inline PartialR2 partial_r2(const RegressionReport& full, const RegressionReport& reduced) {
  if (full.n != reduced.n)
    throw Error("partial_r2: models were fit on different numbers of rows");
  for (const auto& name : reduced.names)
    if (full.index_of(name) < 0)
      throw Error("partial_r2: reduced model has predictor '" + name +
                  "' absent from the full model");
  if (full.p <= reduced.p)
    throw Error("partial_r2: full model must add predictors to the reduced model");
  PartialR2 out;
  out.comparative = reduced.sse > 0 ? 1.0 - full.sse / reduced.sse : 0.0;
  out.adj_difference = full.adj_r2 - reduced.adj_r2;
  return out;
}

}  // namespace lexcomp
