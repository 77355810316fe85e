#pragma once

// Topical advection: a word's topic is its top PPMI-weighted context words
// in a wide window; the advection value is the weighted mean log change of
// those context words, a proxy for how much the word's topic is growing.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexcomp/cooc.hpp"
#include "lexcomp/counts.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

struct TopicProfile {
  std::string target;
  std::vector<std::pair<std::string, double>> words;  // (context, weight), weight non-increasing
};

// Top `top_k` positive-PPMI context words of `target` in a count matrix
// (wide window, spans concatenated). Ties: larger weight first, then
// lexicographic. The target itself is never its own context.
inline TopicProfile topic_profile(const CoocMatrix& topic_counts, std::string_view target,
                                  int top_k = 75) {
  if (top_k <= 0) throw Error("topic_profile: top_k must be positive");
  const auto idx = topic_counts.index_of(target);
  if (!idx) throw Error("topic_profile: word '" + std::string(target) + "' absent from matrix");
  SparseRow weights = ppmi_row(topic_counts, *idx);
  std::erase_if(weights, [&](const auto& p) { return p.first == *idx; });

  std::sort(weights.begin(), weights.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return topic_counts.vocab[a.first] < topic_counts.vocab[b.first];
  });
  if (weights.size() > static_cast<std::size_t>(top_k)) weights.resize(top_k);

  TopicProfile out;
  out.target = std::string(target);
  out.words.reserve(weights.size());
  for (const auto& [c, w] : weights) out.words.emplace_back(topic_counts.vocab[c], w);
  return out;
}

struct ContextChange {
  double f1_pmw = 0;  // context word's aggregate frequency in the earlier span
  double f2_pmw = 0;  // and in the later span
};

// Weighted mean log change over the profile's context words:
//   sum_i w_i * logchange(f_i) / sum_i w_i.
inline double advection_value(const TopicProfile& profile, std::span<const ContextChange> freqs,
                              double s1, double s2) {
  if (profile.words.empty()) throw Error("advection_value: empty topic profile");
  if (freqs.size() != profile.words.size())
    throw Error("advection_value: frequencies not aligned to profile");
  double wsum = 0, acc = 0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double w = profile.words[i].second;
    acc += w * log_change(freqs[i].f1_pmw, freqs[i].f2_pmw, s1, s2);
    wsum += w;
  }
  if (wsum <= 0) throw Error("advection_value: weights sum to zero");
  return acc / wsum;
}

}  // namespace lexcomp
