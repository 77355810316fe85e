#pragma once

// Multi-word unit handling: detect strongly associated adjacent lemma pairs
// (per sub-span PPMI over adjacent-pair counts) and merge them in the token
// stream before any counting.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexcomp/corpus.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

struct MwuSet {
  std::set<std::pair<std::string, std::string>> pairs;

  bool contains(const std::string& a, const std::string& b) const {
    return pairs.count({a, b}) > 0;
  }
};

// Pulls documents one at a time; returns false when exhausted.
using DocumentSource = std::function<bool(std::vector<TokenEvent>&)>;

// Adjacent-pair PPMI >= threshold within any length-`subspan_len` block of
// units qualifies the ordered pair; results are unioned across blocks.
inline MwuSet detect_mwus(const DocumentSource& docs, int unit_min, int subspan_len,
                          double ppmi_threshold) {
  if (subspan_len <= 0) throw Error("detect_mwus: subspan length must be positive");

  struct SubspanCounts {
    std::unordered_map<std::string, std::int64_t> pair_count;  // "a\tb"
    std::unordered_map<std::string, std::int64_t> left, right;
    std::int64_t total = 0;
  };
  std::map<int, SubspanCounts> blocks;

  std::vector<TokenEvent> doc;
  while (docs(doc)) {
    if (doc.size() < 2) continue;
    auto& blk = blocks[(doc[0].time_unit - unit_min) / subspan_len];
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
      const std::string& a = doc[i].lemma;
      const std::string& b = doc[i + 1].lemma;
      ++blk.pair_count[a + '\t' + b];
      ++blk.left[a];
      ++blk.right[b];
      ++blk.total;
    }
  }

  MwuSet out;
  for (const auto& [idx, blk] : blocks) {
    if (blk.total == 0) continue;
    const double t = static_cast<double>(blk.total);
    for (const auto& [key, c] : blk.pair_count) {
      const auto tab = key.find('\t');
      const std::string a = key.substr(0, tab);
      const std::string b = key.substr(tab + 1);
      const double expect = static_cast<double>(blk.left.at(a)) *
                            static_cast<double>(blk.right.at(b)) / t;
      const double pmi = std::log2(static_cast<double>(c) / expect);
      if (pmi >= ppmi_threshold) out.pairs.insert({a, b});
    }
  }
  return out;
}

// Greedy left-to-right merge of listed pairs within a document; a merged
// token keeps the first event's unit/doc/author and concatenates the lemmas.
inline void apply_mwus(std::vector<TokenEvent>& doc, const MwuSet& mwus) {
  if (mwus.pairs.empty() || doc.size() < 2) return;
  std::vector<TokenEvent> out;
  out.reserve(doc.size());
  std::size_t i = 0;
  while (i < doc.size()) {
    if (i + 1 < doc.size() && mwus.contains(doc[i].lemma, doc[i + 1].lemma)) {
      TokenEvent merged = doc[i];
      merged.lemma += doc[i + 1].lemma;
      out.push_back(std::move(merged));
      i += 2;
    } else {
      out.push_back(std::move(doc[i]));
      ++i;
    }
  }
  doc = std::move(out);
}

// One pair per line: lemma1<TAB>lemma2.
inline void save_mwus(const MwuSet& mwus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& [a, b] : mwus.pairs) out << a << '\t' << b << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline MwuSet load_mwus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open MWU list '" + path + "'");
  MwuSet out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2)
      throw Error(path + ":" + std::to_string(line_no) + ": want lemma1<TAB>lemma2");
    out.pairs.insert({std::string(trim(parts[0])), std::string(trim(parts[1]))});
  }
  return out;
}

}  // namespace lexcomp
