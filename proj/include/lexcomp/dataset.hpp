#pragma once

// The analysis dataset: one row per target with the equalization response,
// the advection predictor and the control covariates; plus the shared logic
// that turns rows into a design matrix and fits the full/reduced models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexcomp/regression.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

struct AnalysisRow {
  std::string word;
  int t1_start = 0, t1_end = 0, t2_start = 0, t2_end = 0;
  double f1_pmw = 0, f2_pmw = 0;
  double log_change = 0;
  double pmw_change = 0;
  int start_unit = 0;
  double coverage_t1 = 0, coverage_t2 = 0;
  double peak_z = 0;
  int word_length = 0;
  std::optional<double> user_ratio;
  double advection = 0;
  int n_topic_words = 0;
  double nearest_cosine_distance = 0;
  int min_edit_distance = 0;
  double max_decrease_pct = 0;
  double equalization_range = 0;
  int n_equalizers = 0;
  double leftover = 0;
  bool exhausted = false;
  bool leftover_drop = false;  // walk overshot by more than the change itself
};

struct DesignOptions {
  bool include_exhausted = false;  // keep rows whose walk ran out of neighbors
  bool apply_leftover_filter = true;
  bool zscore = false;  // standardize predictor columns
};

struct Design {
  Eigen::MatrixXd x;  // intercept + predictors
  Eigen::VectorXd y;  // equalization range
  std::vector<std::string> names;
  std::vector<std::string> dropped_constant;  // zero-variance predictors removed
  int n_dropped_exhausted = 0;
  int n_dropped_leftover = 0;
  std::vector<std::size_t> row_index;  // into the input rows
};

// Builds the regression design. Predictor order is fixed; `user_ratio`
// participates only when present on every used row. Constant columns are
// dropped (recorded) so downstream fits stay full-rank on degenerate data.
inline Design build_design(const std::vector<AnalysisRow>& rows, const DesignOptions& opt) {
  Design d;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.exhausted && !opt.include_exhausted) {
      ++d.n_dropped_exhausted;
      continue;
    }
    if (opt.apply_leftover_filter && r.leftover_drop) {
      ++d.n_dropped_leftover;
      continue;
    }
    used.push_back(i);
  }
  if (used.empty()) throw Error("build_design: no rows survive the filters");

  bool all_have_ratio = true;
  for (auto i : used)
    if (!rows[i].user_ratio) {
      all_have_ratio = false;
      break;
    }

  struct Col {
    std::string name;
    std::vector<double> vals;
  };
  std::vector<Col> cols;
  auto add_col = [&](std::string name, auto&& get) {
    Col c;
    c.name = std::move(name);
    c.vals.reserve(used.size());
    for (auto i : used) c.vals.push_back(static_cast<double>(get(rows[i])));
    cols.push_back(std::move(c));
  };
  add_col("advection", [](const AnalysisRow& r) { return r.advection; });
  add_col("pmw_change", [](const AnalysisRow& r) { return r.pmw_change; });
  add_col("peak_z", [](const AnalysisRow& r) { return r.peak_z; });
  add_col("start_unit", [](const AnalysisRow& r) { return r.start_unit; });
  add_col("word_length", [](const AnalysisRow& r) { return r.word_length; });
  add_col("min_edit_distance", [](const AnalysisRow& r) { return r.min_edit_distance; });
  add_col("nearest_cosine_distance",
          [](const AnalysisRow& r) { return r.nearest_cosine_distance; });
  add_col("max_decrease_pct", [](const AnalysisRow& r) { return r.max_decrease_pct; });
  add_col("leftover", [](const AnalysisRow& r) { return r.leftover; });
  if (all_have_ratio)
    add_col("user_ratio", [](const AnalysisRow& r) { return *r.user_ratio; });

  std::vector<Col> kept;
  for (auto& c : cols) {
    // Constant up to rounding noise: derived statistics can collapse to one
    // value that differs only in the last bits across rows, which would make
    // the column numerically collinear with the intercept.
    double lo = c.vals.front(), hi = c.vals.front();
    for (double v : c.vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    if (hi - lo <= 1e-12 * scale)
      d.dropped_constant.push_back(c.name);
    else
      kept.push_back(std::move(c));
  }
  if (kept.empty()) throw Error("build_design: every predictor is constant");

  const auto n = static_cast<Eigen::Index>(used.size());
  d.x.resize(n, static_cast<Eigen::Index>(kept.size()) + 1);
  d.y.resize(n);
  d.names.push_back("(intercept)");
  d.x.col(0).setOnes();
  for (std::size_t j = 0; j < kept.size(); ++j) {
    auto& c = kept[j];
    if (opt.zscore) {
      double mean = 0;
      for (double v : c.vals) mean += v;
      mean /= static_cast<double>(c.vals.size());
      double ss = 0;
      for (double v : c.vals) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(c.vals.size() - 1));
      for (double& v : c.vals) v = (v - mean) / sd;
    }
    d.names.push_back(c.name);
    for (Eigen::Index i = 0; i < n; ++i) d.x(i, static_cast<Eigen::Index>(j) + 1) = c.vals[i];
  }
  for (Eigen::Index i = 0; i < n; ++i)
    d.y(i) = rows[used[static_cast<std::size_t>(i)]].equalization_range;
  d.row_index = std::move(used);
  return d;
}

struct ModelPair {
  Design design;
  RegressionReport full;     // controls + advection
  RegressionReport reduced;  // controls only
  PartialR2 partial;
};

// Fits the full model and the advection-free reduced model on one design.
inline ModelPair fit_models(const std::vector<AnalysisRow>& rows, const DesignOptions& opt) {
  ModelPair mp;
  mp.design = build_design(rows, opt);
  const auto& d = mp.design;
  mp.full = ols_fit(d.x, d.y, d.names);

  int adv = -1;
  for (std::size_t j = 0; j < d.names.size(); ++j)
    if (d.names[j] == "advection") adv = static_cast<int>(j);
  if (adv < 0)
    throw Error("fit_models: advection is constant in this dataset; no effect to test");
  Eigen::MatrixXd xr(d.x.rows(), d.x.cols() - 1);
  std::vector<std::string> nr;
  int out = 0;
  for (int j = 0; j < d.x.cols(); ++j) {
    if (j == adv) continue;
    xr.col(out++) = d.x.col(j);
    nr.push_back(d.names[static_cast<std::size_t>(j)]);
  }
  mp.reduced = ols_fit(xr, d.y, std::move(nr));
  mp.partial = partial_r2(mp.full, mp.reduced);
  return mp;
}

// ---- analysis CSV -----------------------------------------------------------

inline const char* kAnalysisCsvHeader =
    "word,t1_start,t1_end,t2_start,t2_end,f1_pmw,f2_pmw,log_change,pmw_change,start_unit,"
    "coverage_t1,coverage_t2,peak_z,word_length,user_ratio,advection,n_topic_words,"
    "nearest_cosine_distance,min_edit_distance,max_decrease_pct,equalization_range,"
    "n_equalizers,leftover,exhausted,leftover_drop";

inline void save_analysis_csv(const std::vector<AnalysisRow>& rows, const std::string& path,
                              const std::string& stamp = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!stamp.empty()) out << "# " << stamp << '\n';
  out << kAnalysisCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.word << ',' << r.t1_start << ',' << r.t1_end << ',' << r.t2_start << ','
        << r.t2_end << ',' << fmt_double(r.f1_pmw) << ',' << fmt_double(r.f2_pmw) << ','
        << fmt_double(r.log_change) << ',' << fmt_double(r.pmw_change) << ',' << r.start_unit
        << ',' << fmt_double(r.coverage_t1) << ',' << fmt_double(r.coverage_t2) << ','
        << fmt_double(r.peak_z) << ',' << r.word_length << ','
        << (r.user_ratio ? fmt_double(*r.user_ratio) : std::string()) << ','
        << fmt_double(r.advection) << ',' << r.n_topic_words << ','
        << fmt_double(r.nearest_cosine_distance) << ',' << r.min_edit_distance << ','
        << fmt_double(r.max_decrease_pct) << ',' << fmt_double(r.equalization_range) << ','
        << r.n_equalizers << ',' << fmt_double(r.leftover) << ',' << (r.exhausted ? 1 : 0)
        << ',' << (r.leftover_drop ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

inline std::vector<AnalysisRow> load_analysis_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open analysis table '" + path + "'");
  std::string line;
  std::int64_t line_no = 0;
  std::unordered_map<std::string, std::size_t> col;
  std::vector<AnalysisRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto parts = split(t, ',');
    if (col.empty()) {
      for (std::size_t i = 0; i < parts.size(); ++i) col.emplace(std::string(parts[i]), i);
      for (const char* need :
           {"word", "pmw_change", "advection", "equalization_range", "exhausted"})
        if (!col.count(need))
          throw Error(path + ": missing required column '" + std::string(need) + "'");
      continue;
    }
    auto field = [&](const char* name) -> std::string_view {
      auto it = col.find(name);
      if (it == col.end() || it->second >= parts.size()) return {};
      return parts[it->second];
    };
    auto fnum = [&](const char* name, double dflt = 0) {
      const auto s = field(name);
      return s.empty() ? dflt : to_double(s, name);
    };
    AnalysisRow r;
    r.word = std::string(field("word"));
    if (r.word.empty())
      throw Error(path + ":" + std::to_string(line_no) + ": row without a word");
    r.t1_start = static_cast<int>(fnum("t1_start"));
    r.t1_end = static_cast<int>(fnum("t1_end"));
    r.t2_start = static_cast<int>(fnum("t2_start"));
    r.t2_end = static_cast<int>(fnum("t2_end"));
    r.f1_pmw = fnum("f1_pmw");
    r.f2_pmw = fnum("f2_pmw");
    r.log_change = fnum("log_change");
    r.pmw_change = fnum("pmw_change");
    r.start_unit = static_cast<int>(fnum("start_unit"));
    r.coverage_t1 = fnum("coverage_t1");
    r.coverage_t2 = fnum("coverage_t2");
    r.peak_z = fnum("peak_z");
    r.word_length = static_cast<int>(fnum("word_length"));
    const auto ur = field("user_ratio");
    if (!ur.empty()) r.user_ratio = to_double(ur, "user_ratio");
    r.advection = fnum("advection");
    r.n_topic_words = static_cast<int>(fnum("n_topic_words"));
    r.nearest_cosine_distance = fnum("nearest_cosine_distance");
    r.min_edit_distance = static_cast<int>(fnum("min_edit_distance"));
    r.max_decrease_pct = fnum("max_decrease_pct");
    r.equalization_range = fnum("equalization_range");
    r.n_equalizers = static_cast<int>(fnum("n_equalizers"));
    r.leftover = fnum("leftover");
    r.exhausted = fnum("exhausted") != 0;
    r.leftover_drop = fnum("leftover_drop") != 0;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error("analysis table '" + path + "' has no rows");
  return rows;
}

}  // namespace lexcomp
