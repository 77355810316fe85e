#pragma once

// Equalization: walk a target's semantic neighbors from nearest outward,
// accumulating their frequency decreases until they cover the target's own
// gain. The normalized distance where that happens is the equalization
// range - low means close competition, high means diffuse replacement.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexcomp/space.hpp"
#include "lexcomp/targets.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

// A neighbor's aggregate pmw frequency in the model span (where the space
// was trained) and the probe span (where the target changed).
struct NeighborFreq {
  double f1 = 0;
  double f2 = 0;
};

struct Equalizer {
  std::uint32_t rank = 0;  // position in the neighbor list (0 = nearest)
  std::string word;
  double decrease = 0;  // pmw lost between spans (positive)
  double f1 = 0;        // pmw before the loss
};

struct CompetitionResult {
  double equalization_range = 0;  // normalized distance of the stopping neighbor
  std::vector<Equalizer> equalizers;
  double leftover = 0;     // accumulated decrease minus target change
  bool exhausted = false;  // list ran out before the change was covered
};

// Traverses neighbors in order; words that rose or stayed flat contribute
// nothing but are still passed. Stops at the first neighbor where the
// running sum of decreases reaches `pmw_change`.
inline CompetitionResult equalize(double pmw_change, const NeighborList& list,
                                  std::span<const NeighborFreq> freqs) {
  if (!(pmw_change > 0)) throw Error("equalize: target change must be positive");
  if (list.entries.empty()) throw Error("equalize: empty neighbor list");
  if (freqs.size() != list.entries.size())
    throw Error("equalize: frequencies not aligned to neighbor list");

  CompetitionResult res;
  double acc = 0;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const double dec = freqs[i].f1 - freqs[i].f2;
    if (dec > 0) {
      acc += dec;
      res.equalizers.push_back(Equalizer{static_cast<std::uint32_t>(i), list.entries[i].word,
                                         dec, freqs[i].f1});
    }
    if (acc >= pmw_change) {
      res.equalization_range = list.entries[i].normalized_distance;
      res.leftover = acc - pmw_change;
      return res;
    }
  }
  res.exhausted = true;
  res.equalization_range = list.entries.back().normalized_distance;
  res.leftover = acc - pmw_change;  // negative: not fully covered
  return res;
}

// A walk that overshot by more than the target's own change says little
// about where equalization truly happened; such rows are dropped.
inline bool leftover_filter_keep(const CompetitionResult& res, double pmw_change) {
  return !(res.leftover > pmw_change);
}

// Optimal-string-alignment Damerau-Levenshtein distance over codepoints:
// unit-cost insert, delete, substitute and adjacent transposition.
inline int damerau_levenshtein(std::string_view a, std::string_view b) {
  const auto ca = utf8_codepoints(a);
  const auto cb = utf8_codepoints(b);
  const std::size_t n = ca.size(), m = cb.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int cost = ca[i - 1] == cb[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && ca[i - 1] == cb[j - 2] && ca[i - 2] == cb[j - 1])
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  }
  return d[n][m];
}

// Control covariates for one analyzed target.
struct Controls {
  double pmw_change = 0;
  double peak_z = 0;
  int start_unit = 0;
  int word_length = 0;
  int min_edit_distance = 0;         // over the nearest `edit_range` neighbors
  double nearest_cosine_distance = 0;
  double max_decrease_pct = 0;  // largest equalizer loss relative to its own f1
  double leftover = 0;
  std::optional<double> user_ratio;
};

inline Controls make_controls(const TargetRecord& target, const NeighborList& list,
                              const CompetitionResult& res, int edit_range = 20) {
  if (list.entries.empty()) throw Error("make_controls: empty neighbor list");
  Controls c;
  c.pmw_change = target.pmw_change;
  c.peak_z = target.peak_z;
  c.start_unit = target.start_unit;
  c.word_length = target.word_length;
  c.nearest_cosine_distance = list.entries.front().cosine_distance;
  c.leftover = res.leftover;
  c.user_ratio = target.user_ratio;

  int best = std::numeric_limits<int>::max();
  const std::size_t upto = std::min(list.entries.size(), static_cast<std::size_t>(edit_range));
  for (std::size_t i = 0; i < upto; ++i)
    best = std::min(best, damerau_levenshtein(target.word, list.entries[i].word));
  c.min_edit_distance = best;

  double pct = 0;
  for (const auto& eq : res.equalizers)
    pct = std::max(pct, eq.decrease / eq.f1 * 100.0);
  c.max_decrease_pct = pct;
  return c;
}

}  // namespace lexcomp
