#pragma once

// Synthetic corpus generator with planted structure. Every planted target
// rises at a chosen boundary inside a private topic of context words.
// Two planted properties cross:
//   - twin: a near-synonym sharing the target's contexts declines by at
//     least the target's gain (direct competition, equalization range ~ 0);
//     without a twin, mid-distance "related decliner" words absorb the gain
//     (diffuse replacement, equalization range well above 0).
//   - rising topic: context-word counts exactly double at the boundary
//     (advection = ln 2) or stay flat (advection = 0).
// Token totals per unit are exact, so planted frequency ratios are exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexcomp/util.hpp"

namespace lexcomp {

struct SyntheticSpec {
  // corpus shape
  int n_units = 20;
  std::int64_t tokens_per_unit = 500000;
  int span_len = 9;
  std::vector<int> boundary_offsets = {9, 10, 11};  // t2 start, as offset from first unit
  int base_year = 1900;
  std::uint64_t seed = 99495ULL;

  // how many targets per cell of the twin x rising-topic cross
  int n_twin_stable = 40;  // direct competition
  int n_twin_rising = 0;
  int n_open_stable = 0;
  int n_open_rising = 40;  // co-existence inside a growing topic

  // per-target word families (counts are per word per unit)
  int n_contexts = 8;
  int x_count = 150;       // context words; doubles after the boundary when rising
  int sibling_count = 30;  // stable near-neighbor keeping distances non-degenerate
  int n_p_words = 2;
  int p_count = 40;  // sibling's private contexts
  int n_e_words = 5; // related decliners at mid distance
  int e_count_min = 20, e_count_max = 45;
  int e_dec_min = 6, e_dec_max = 14;
  int n_q_words = 3;
  int q_count = 160;  // decliners' private contexts
  int n_r_words = 2;
  int r_count = 80;  // twin's private contexts
  int focal_lo_max = 3;
  int focal_hi_min = 24, focal_hi_max = 40;

  // Unrelated filler vocabulary.  Kept small so its co-occurrence block stays
  // dense: with observed counts near expectation the block carries no
  // association weight and the planted families dominate the spectrum.
  int n_background = 120;

  int n_targets() const {
    return n_twin_stable + n_twin_rising + n_open_stable + n_open_rising;
  }
};

struct PlantedTarget {
  std::string word;
  bool has_twin = false;
  bool rising_topic = false;
  int boundary_unit = 0;      // first unit (year) of the rise
  int lo = 0, hi = 0;         // focal per-unit counts before/after
  std::string twin_word;      // empty when open
  int twin_hi = 0, twin_lo = 0;  // twin per-unit counts before/after (0 when open)
  double expected_advection = 0;
  double expected_log_change = 0;
  double expected_f1_pmw = 0, expected_f2_pmw = 0, expected_pmw_change = 0;
};

struct GroundTruth {
  std::vector<PlantedTarget> targets;
  std::int64_t total_tokens = 0;
  int unit_min = 0, unit_max = 0;
};

namespace detail {

// Plan for one planted target; all counts are per unit.
struct TargetPlan {
  bool has_twin = false, rising = false;
  int offset = 0;  // boundary as unit index
  int lo = 0, hi = 0;
  int twin_hi = 0, twin_lo = 0;
  double alpha = 1.0;  // twin context fidelity (share of shared contexts)
  double beta = 0.8;   // sibling context fidelity
  std::vector<int> e_hi, e_lo;
  std::string focal, twin, sibling;
  std::vector<std::string> xs, ps, qs, rs, es;
};

class NamePool {
 public:
  explicit NamePool(std::uint64_t seed) : rng_(seed) {}

  std::string fresh() {
    for (;;) {
      const int len = 4 + static_cast<int>(rng_.below(6));
      std::string w;
      w.reserve(len);
      for (int i = 0; i < len; ++i)
        w.push_back(static_cast<char>('a' + rng_.below(26)));
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng rng_;
  std::set<std::string> used_;
};

// Largest-remainder apportionment of `total` across weights.
inline std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& w) {
  double wsum = 0;
  for (double x : w) wsum += x;
  std::vector<std::int64_t> out(w.size(), 0);
  std::int64_t assigned = 0;
  std::vector<std::pair<double, std::size_t>> rem;
  rem.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double ideal = static_cast<double>(total) * w[i] / wsum;
    out[i] = static_cast<std::int64_t>(ideal);
    assigned += out[i];
    rem.emplace_back(ideal - static_cast<double>(out[i]), i);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t k = 0; k < total - assigned; ++k) ++out[rem[static_cast<std::size_t>(k)].second];
  return out;
}

// Bresenham-even flags: n slots of which `ones` are true, spread evenly.
inline std::vector<bool> spread_flags(int n, int ones) {
  std::vector<bool> out(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i)
    if ((static_cast<std::int64_t>(i + 1) * ones) / n > (static_cast<std::int64_t>(i) * ones) / n)
      out[static_cast<std::size_t>(i)] = true;
  return out;
}

}  // namespace detail

// Writes corpus JSONL to `corpus_path` and returns the planted ground truth.
inline GroundTruth generate_synthetic(const SyntheticSpec& spec, const std::string& corpus_path) {
  if (spec.n_units < 2 * spec.span_len)
    throw Error("synthetic: unit range shorter than two spans");
  if (spec.boundary_offsets.empty()) throw Error("synthetic: no boundary offsets");
  for (int off : spec.boundary_offsets)
    if (off < spec.span_len || off + spec.span_len > spec.n_units)
      throw Error("synthetic: boundary offset " + std::to_string(off) +
                  " does not fit two spans of " + std::to_string(spec.span_len));
  if (spec.n_targets() <= 0) throw Error("synthetic: no targets requested");
  if (spec.n_contexts < 2 || spec.n_e_words < 1 || spec.n_q_words < 1 || spec.n_p_words < 1)
    throw Error("synthetic: word-family sizes too small");
  if (static_cast<std::int64_t>(spec.e_dec_max) * spec.n_e_words <
      static_cast<std::int64_t>(std::ceil(1.2 * (spec.focal_hi_max - 1))))
    throw Error("synthetic: decliner capacity cannot cover the largest focal rise");

  Rng rng(spec.seed);
  detail::NamePool names(derive_seed(spec.seed, 1));

  // ---- plan all targets
  std::vector<detail::TargetPlan> plans;
  std::vector<std::pair<bool, bool>> cells;  // (has_twin, rising)
  for (int i = 0; i < spec.n_twin_stable; ++i) cells.emplace_back(true, false);
  for (int i = 0; i < spec.n_twin_rising; ++i) cells.emplace_back(true, true);
  for (int i = 0; i < spec.n_open_stable; ++i) cells.emplace_back(false, false);
  for (int i = 0; i < spec.n_open_rising; ++i) cells.emplace_back(false, true);

  GroundTruth truth;
  truth.unit_min = spec.base_year;
  truth.unit_max = spec.base_year + spec.n_units - 1;

  for (std::size_t t = 0; t < cells.size(); ++t) {
    detail::TargetPlan p;
    p.has_twin = cells[t].first;
    p.rising = cells[t].second;
    p.offset = spec.boundary_offsets[t % spec.boundary_offsets.size()];
    p.lo = 1 + static_cast<int>(rng.below(spec.focal_lo_max));
    const int hi_floor = std::max(spec.focal_hi_min, 8 * p.lo);
    if (hi_floor > spec.focal_hi_max)
      throw Error("synthetic: focal_hi_max too small for an 8x rise");
    p.hi = hi_floor + static_cast<int>(rng.below(spec.focal_hi_max - hi_floor + 1));
    const int delta = p.hi - p.lo;

    // Context fidelities order the neighbor list: the word whose contexts
    // overlap the focal's the most sits nearest in the semantic space.  The
    // twin must outrank the sibling, and for open targets the sibling must
    // outrank the half-overlap decliners, so the draws keep disjoint ranges
    // with a gap.  Never 1.0: a word whose contexts are exactly the focal's
    // gets an identical association row (its own frequency cancels out of the
    // ratio) and would collide with the focal itself.
    if (p.has_twin) {
      p.alpha = rng.uniform(0.88, 0.98);
      const double kappa = rng.uniform(0.02, 0.5);
      const double ratio = rng.uniform(1.1, 1.4);
      const int twin_dec = static_cast<int>(std::ceil(ratio * delta));
      p.twin_hi = static_cast<int>(std::ceil(twin_dec / (1.0 - kappa)));
      p.twin_lo = p.twin_hi - twin_dec;
      p.beta = rng.uniform(0.70, 0.84);
    } else {
      p.beta = rng.uniform(0.88, 0.96);
    }

    // Related decliners: per-word drops that jointly cover 1.2x the rise.
    const int need = static_cast<int>(std::ceil(1.2 * delta));
    std::vector<int> dec(spec.n_e_words);
    p.e_hi.resize(spec.n_e_words);
    int dec_sum = 0;
    for (int i = 0; i < spec.n_e_words; ++i) {
      dec[i] = spec.e_dec_min + static_cast<int>(rng.below(spec.e_dec_max - spec.e_dec_min + 1));
      p.e_hi[i] = std::max(spec.e_count_min + static_cast<int>(rng.below(
                               spec.e_count_max - spec.e_count_min + 1)),
                           dec[i] + 6);
      dec_sum += dec[i];
    }
    for (int i = 0; dec_sum < need; i = (i + 1) % spec.n_e_words) {
      if (dec[i] < spec.e_dec_max) {
        ++dec[i];
        p.e_hi[i] = std::max(p.e_hi[i], dec[i] + 6);
        ++dec_sum;
      }
    }
    p.e_lo.resize(spec.n_e_words);
    for (int i = 0; i < spec.n_e_words; ++i) p.e_lo[i] = p.e_hi[i] - dec[i];

    p.focal = names.fresh();
    if (p.has_twin) p.twin = names.fresh();
    p.sibling = names.fresh();
    for (int i = 0; i < spec.n_contexts; ++i) p.xs.push_back(names.fresh());
    for (int i = 0; i < spec.n_p_words; ++i) p.ps.push_back(names.fresh());
    for (int i = 0; i < spec.n_q_words; ++i) p.qs.push_back(names.fresh());
    if (p.has_twin)
      for (int i = 0; i < spec.n_r_words; ++i) p.rs.push_back(names.fresh());
    for (int i = 0; i < spec.n_e_words; ++i) p.es.push_back(names.fresh());

    PlantedTarget rec;
    rec.word = p.focal;
    rec.has_twin = p.has_twin;
    rec.rising_topic = p.rising;
    rec.boundary_unit = spec.base_year + p.offset;
    rec.lo = p.lo;
    rec.hi = p.hi;
    rec.twin_word = p.twin;
    rec.twin_hi = p.twin_hi;
    rec.twin_lo = p.twin_lo;
    rec.expected_advection = p.rising ? std::log(2.0) : 0.0;
    rec.expected_log_change = std::log(static_cast<double>(p.hi) / static_cast<double>(p.lo));
    rec.expected_f1_pmw = static_cast<double>(p.lo) * 1e6 / static_cast<double>(spec.tokens_per_unit);
    rec.expected_f2_pmw = static_cast<double>(p.hi) * 1e6 / static_cast<double>(spec.tokens_per_unit);
    rec.expected_pmw_change = rec.expected_f2_pmw - rec.expected_f1_pmw;
    truth.targets.push_back(std::move(rec));
    plans.push_back(std::move(p));
  }

  // Background words with stable relative weights absorb the remaining
  // budget of every unit, keeping unit totals exact.
  std::vector<std::string> bg_words;
  std::vector<double> bg_weights;
  for (int i = 0; i < spec.n_background; ++i) {
    bg_words.push_back(names.fresh());
    bg_weights.push_back(rng.uniform(0.6, 1.4));
  }

  // ---- emit documents unit by unit
  std::ofstream out(corpus_path, std::ios::binary);
  if (!out) throw Error("cannot write '" + corpus_path + "'");
  std::string line;
  line.reserve(1 << 13);
  std::vector<const std::string*> doc;

  auto flush_doc = [&](int year) {
    if (doc.empty()) return;
    line.clear();
    line += "{\"date\":\"";
    line += std::to_string(year);
    line += "\",\"tokens\":[";
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) line += ',';
      line += "[\"";
      line += *doc[i];
      line += "\",\"N\"]";
    }
    line += "]}\n";
    out << line;
    doc.clear();
  };

  for (int u = 0; u < spec.n_units; ++u) {
    const int year = spec.base_year + u;
    std::int64_t written = 0;

    for (const auto& p : plans) {
      const bool post = u >= p.offset;
      const int cnt_f = post ? p.hi : p.lo;
      const int cnt_t = p.has_twin ? (post ? p.twin_lo : p.twin_hi) : 0;
      const int cnt_x = (p.rising && post) ? 2 * spec.x_count : spec.x_count;

      // Remaining context-token budget per word family this unit.
      std::vector<int> rem_x(p.xs.size(), cnt_x);
      std::vector<int> rem_p(p.ps.size(), spec.p_count);
      std::vector<int> rem_q(p.qs.size(), spec.q_count);
      std::vector<int> rem_r(p.rs.size(), p.has_twin ? spec.r_count : 0);
      std::size_t wx = 0, wp = 0, wq = 0, wr = 0;  // consumption wheels

      auto take = [&](std::vector<int>& rem, std::size_t& wheel,
                      const std::vector<std::string>& words) -> const std::string* {
        for (std::size_t tries = 0; tries < rem.size(); ++tries) {
          const std::size_t i = wheel % rem.size();
          ++wheel;
          if (rem[i] > 0) {
            --rem[i];
            ++written;
            return &words[i];
          }
        }
        throw Error("synthetic: context budget exhausted (configuration infeasible)");
      };

      // focal docs: [x x F x x]
      for (int i = 0; i < cnt_f; ++i) {
        doc.push_back(take(rem_x, wx, p.xs));
        doc.push_back(take(rem_x, wx, p.xs));
        doc.push_back(&p.focal);
        ++written;
        doc.push_back(take(rem_x, wx, p.xs));
        doc.push_back(take(rem_x, wx, p.xs));
        flush_doc(year);
      }
      // twin docs: [c c T c c], contexts alpha-shared with the focal topic
      if (p.has_twin && cnt_t > 0) {
        const int slots = 4 * cnt_t;
        const int n_private = static_cast<int>(
            std::lround(static_cast<double>(slots) * (1.0 - p.alpha)));
        const auto is_private = detail::spread_flags(slots, n_private);
        int s = 0;
        for (int i = 0; i < cnt_t; ++i) {
          for (int half = 0; half < 2; ++half) {
            for (int j = 0; j < 2; ++j, ++s)
              doc.push_back(is_private[static_cast<std::size_t>(s)] ? take(rem_r, wr, p.rs)
                                                                    : take(rem_x, wx, p.xs));
            if (half == 0) {
              doc.push_back(&p.twin);
              ++written;
            }
          }
          flush_doc(year);
        }
      }
      // sibling docs: [m m S m m], beta-shared contexts, private rest
      {
        const int slots = 4 * spec.sibling_count;
        const int n_private = static_cast<int>(
            std::lround(static_cast<double>(slots) * (1.0 - p.beta)));
        const auto is_private = detail::spread_flags(slots, n_private);
        int s = 0;
        for (int i = 0; i < spec.sibling_count; ++i) {
          for (int half = 0; half < 2; ++half) {
            for (int j = 0; j < 2; ++j, ++s)
              doc.push_back(is_private[static_cast<std::size_t>(s)] ? take(rem_p, wp, p.ps)
                                                                    : take(rem_x, wx, p.xs));
            if (half == 0) {
              doc.push_back(&p.sibling);
              ++written;
            }
          }
          flush_doc(year);
        }
      }
      // decliner docs: [x q E q x] (half shared topic, half private)
      for (std::size_t e = 0; e < p.es.size(); ++e) {
        const int cnt_e = post ? p.e_lo[e] : p.e_hi[e];
        for (int i = 0; i < cnt_e; ++i) {
          doc.push_back(take(rem_x, wx, p.xs));
          doc.push_back(take(rem_q, wq, p.qs));
          doc.push_back(&p.es[e]);
          ++written;
          doc.push_back(take(rem_q, wq, p.qs));
          doc.push_back(take(rem_x, wx, p.xs));
          flush_doc(year);
        }
      }
      // filler docs: remaining planted context tokens in pure-family docs
      auto fill = [&](std::vector<int>& rem, std::size_t& wheel,
                      const std::vector<std::string>& words) {
        std::int64_t left = 0;
        for (int v : rem) left += v;
        while (left > 0) {
          const int len = static_cast<int>(std::min<std::int64_t>(left, 5));
          for (int i = 0; i < len; ++i) doc.push_back(take(rem, wheel, words));
          flush_doc(year);
          left -= len;
        }
      };
      fill(rem_x, wx, p.xs);
      fill(rem_p, wp, p.ps);
      fill(rem_q, wq, p.qs);
      if (p.has_twin) fill(rem_r, wr, p.rs);
    }

    // background absorbs the rest of the unit budget exactly
    const std::int64_t m = spec.tokens_per_unit - written;
    if (m < static_cast<std::int64_t>(bg_words.size()) * 20)
      throw Error("synthetic: unit " + std::to_string(year) +
                  " leaves too little budget for background words (planted " +
                  std::to_string(written) + " of " + std::to_string(spec.tokens_per_unit) + ")");
    const auto bg_counts = detail::apportion(m, bg_weights);
    std::vector<std::uint32_t> bag;
    bag.reserve(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < bg_counts.size(); ++i)
      for (std::int64_t c = 0; c < bg_counts[i]; ++c)
        bag.push_back(static_cast<std::uint32_t>(i));
    Rng urng(derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(u)));
    urng.shuffle(bag);
    std::size_t pos = 0;
    while (pos < bag.size()) {
      const std::size_t len =
          std::min<std::size_t>(bag.size() - pos, 40 + urng.below(81));
      for (std::size_t i = 0; i < len; ++i) doc.push_back(&bg_words[bag[pos + i]]);
      flush_doc(year);
      pos += len;
    }
    written += static_cast<std::int64_t>(bag.size());
    if (written != spec.tokens_per_unit)
      throw Error("synthetic: internal accounting error in unit " + std::to_string(year));
    truth.total_tokens += written;
  }
  if (!out) throw Error("write failed for '" + corpus_path + "'");
  return truth;
}

inline void save_truth(const GroundTruth& truth, const SyntheticSpec& spec,
                       const std::string& path) {
  nlohmann::ordered_json j;
  j["unit_min"] = truth.unit_min;
  j["unit_max"] = truth.unit_max;
  j["total_tokens"] = truth.total_tokens;
  j["span_len"] = spec.span_len;
  j["seed"] = spec.seed;
  j["tokens_per_unit"] = spec.tokens_per_unit;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : truth.targets) {
    nlohmann::ordered_json e;
    e["word"] = t.word;
    e["has_twin"] = t.has_twin;
    e["rising_topic"] = t.rising_topic;
    e["boundary_unit"] = t.boundary_unit;
    e["lo"] = t.lo;
    e["hi"] = t.hi;
    e["twin_word"] = t.twin_word;
    e["twin_hi"] = t.twin_hi;
    e["twin_lo"] = t.twin_lo;
    e["expected_advection"] = t.expected_advection;
    e["expected_log_change"] = t.expected_log_change;
    e["expected_f1_pmw"] = t.expected_f1_pmw;
    e["expected_f2_pmw"] = t.expected_f2_pmw;
    e["expected_pmw_change"] = t.expected_pmw_change;
    arr.push_back(std::move(e));
  }
  j["targets"] = std::move(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline GroundTruth load_truth(const std::string& path, SyntheticSpec* spec_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open truth file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("truth file '" + path + "': " + e.what());
  }
  GroundTruth truth;
  truth.unit_min = j.at("unit_min").get<int>();
  truth.unit_max = j.at("unit_max").get<int>();
  truth.total_tokens = j.at("total_tokens").get<std::int64_t>();
  if (spec_out != nullptr) {
    spec_out->span_len = j.at("span_len").get<int>();
    spec_out->seed = j.at("seed").get<std::uint64_t>();
    spec_out->tokens_per_unit = j.at("tokens_per_unit").get<std::int64_t>();
  }
  for (const auto& e : j.at("targets")) {
    PlantedTarget t;
    t.word = e.at("word").get<std::string>();
    t.has_twin = e.at("has_twin").get<bool>();
    t.rising_topic = e.at("rising_topic").get<bool>();
    t.boundary_unit = e.at("boundary_unit").get<int>();
    t.lo = e.at("lo").get<int>();
    t.hi = e.at("hi").get<int>();
    t.twin_word = e.at("twin_word").get<std::string>();
    t.twin_hi = e.at("twin_hi").get<int>();
    t.twin_lo = e.at("twin_lo").get<int>();
    t.expected_advection = e.at("expected_advection").get<double>();
    t.expected_log_change = e.at("expected_log_change").get<double>();
    t.expected_f1_pmw = e.at("expected_f1_pmw").get<double>();
    t.expected_f2_pmw = e.at("expected_f2_pmw").get<double>();
    t.expected_pmw_change = e.at("expected_pmw_change").get<double>();
    truth.targets.push_back(std::move(t));
  }
  return truth;
}

}  // namespace lexcomp
