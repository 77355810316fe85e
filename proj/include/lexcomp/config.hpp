#pragma once

// Flat key=value run configuration: parsing, validation, and a canonical
// hash that keys cached artifacts.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "lexcomp/corpus.hpp"
#include "lexcomp/targets.hpp"
#include "lexcomp/util.hpp"

namespace lexcomp {

inline const char* kLibraryVersion = "1.0.0";

struct PipelineConfig {
  // corpus
  std::vector<std::string> corpus;  // JSONL paths, comma-separated in the file
  UnitKind unit_kind = UnitKind::year;
  int unit_min = 0;
  int unit_max = 0;
  std::string stoplist;  // optional path
  std::vector<std::string> excluded_pos;

  // multi-word units
  bool mwu_enabled = false;
  double mwu_ppmi_threshold = 7.0;
  int mwu_subspan_len = 20;

  // target selection
  int span_len = 10;
  double min_log_change = 2.0;
  std::int64_t min_t2_count = 200;
  double min_t2_coverage = 0.8;
  double max_peak_z = 10.0;
  Direction direction = Direction::increase;
  bool twitter_mode = false;  // author-dispersion filter on; authors required
  double min_user_ratio = 0.75;

  // semantic space and topics
  int semantic_window = 2;
  int topic_window = 10;
  int lsa_k = 100;
  std::int64_t min_token_count = 100;
  int topic_k = 75;
  double min_neighbor_coverage = 0.5;
  int neighbor_edit_range = 20;

  // statistics
  int randomize_r = 1000;
  double alpha = 0.05;
  bool include_exhausted = false;
  bool zscore_predictors = false;

  std::uint64_t seed = 42;

  // locations (not part of the config hash)
  std::string out_dir = "out";
  std::string cache_dir;  // default: <out_dir>/cache

  std::string resolved_cache_dir() const {
    return cache_dir.empty() ? out_dir + "/cache" : cache_dir;
  }

  void validate() const {
    if (corpus.empty()) throw Error("config: no corpus files given");
    if (unit_max < unit_min) throw Error("config: unit_max below unit_min");
    if (span_len < 1) throw Error("config: span_len must be at least 1");
    if (unit_max - unit_min + 1 < 2 * span_len)
      throw Error("config: unit range holds fewer than two spans of span_len");
    if (min_t2_coverage < 0 || min_t2_coverage > 1)
      throw Error("config: min_t2_coverage must be within [0,1]");
    if (min_user_ratio < 0 || min_user_ratio > 1)
      throw Error("config: min_user_ratio must be within [0,1]");
    if (min_neighbor_coverage < 0 || min_neighbor_coverage > 1)
      throw Error("config: min_neighbor_coverage must be within [0,1]");
    if (semantic_window < 1 || topic_window < 1)
      throw Error("config: context windows must be at least 1");
    if (lsa_k < 1) throw Error("config: lsa_k must be at least 1");
    if (min_token_count < 1) throw Error("config: min_token_count must be at least 1");
    if (topic_k < 1) throw Error("config: topic_k must be at least 1");
    if (neighbor_edit_range < 1) throw Error("config: neighbor_edit_range must be at least 1");
    if (randomize_r < 0) throw Error("config: randomize_r cannot be negative");
    if (alpha <= 0 || alpha >= 1) throw Error("config: alpha must be within (0,1)");
    if (mwu_enabled && mwu_subspan_len < 1)
      throw Error("config: mwu_subspan_len must be at least 1");
  }

  // Canonical analysis-relevant key=value listing (locations excluded), used
  // to detect config/cache mismatches.
  std::string canonical() const {
    std::map<std::string, std::string> kv;
    std::string paths;
    for (const auto& p : corpus) {
      if (!paths.empty()) paths += ',';
      paths += p;
    }
    kv["corpus"] = paths;
    kv["unit_kind"] = unit_kind == UnitKind::year ? "year" : "day";
    kv["unit_min"] = std::to_string(unit_min);
    kv["unit_max"] = std::to_string(unit_max);
    kv["stoplist"] = stoplist;
    std::string pos;
    for (const auto& p : excluded_pos) {
      if (!pos.empty()) pos += ',';
      pos += p;
    }
    kv["excluded_pos"] = pos;
    kv["mwu_enabled"] = mwu_enabled ? "true" : "false";
    kv["mwu_ppmi_threshold"] = fmt_double(mwu_ppmi_threshold);
    kv["mwu_subspan_len"] = std::to_string(mwu_subspan_len);
    kv["span_len"] = std::to_string(span_len);
    kv["min_log_change"] = fmt_double(min_log_change);
    kv["min_t2_count"] = std::to_string(min_t2_count);
    kv["min_t2_coverage"] = fmt_double(min_t2_coverage);
    kv["max_peak_z"] = fmt_double(max_peak_z);
    kv["direction"] = direction == Direction::increase ? "increase" : "decrease";
    kv["twitter_mode"] = twitter_mode ? "true" : "false";
    kv["min_user_ratio"] = fmt_double(min_user_ratio);
    kv["semantic_window"] = std::to_string(semantic_window);
    kv["topic_window"] = std::to_string(topic_window);
    kv["lsa_k"] = std::to_string(lsa_k);
    kv["min_token_count"] = std::to_string(min_token_count);
    kv["topic_k"] = std::to_string(topic_k);
    kv["min_neighbor_coverage"] = fmt_double(min_neighbor_coverage);
    kv["neighbor_edit_range"] = std::to_string(neighbor_edit_range);
    kv["randomize_r"] = std::to_string(randomize_r);
    kv["alpha"] = fmt_double(alpha);
    kv["include_exhausted"] = include_exhausted ? "true" : "false";
    kv["zscore_predictors"] = zscore_predictors ? "true" : "false";
    kv["seed"] = std::to_string(seed);
    kv["version"] = kLibraryVersion;
    std::string out;
    for (const auto& [k, v] : kv) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

  std::string hash_hex() const {
    const std::uint64_t h = fnv1a64(canonical());
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = '\0';
    return std::string(buf);
  }
};

namespace detail {

inline bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config: key '" + std::string(key) + "' wants a boolean, got '" + std::string(v) +
              "'");
}

// Unit bounds accept either a bare integer or a date (resolved per kind).
inline int parse_unit_bound(std::string_view v, UnitKind kind, std::string_view key) {
  std::int64_t n = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), n);
  if (res.ec == std::errc() && res.ptr == v.data() + v.size()) return static_cast<int>(n);
  (void)key;
  return parse_time_unit(v, kind);
}

}  // namespace detail

inline PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
  // Two passes so unit_kind is known before unit bounds are interpreted.
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int> seen;
  std::int64_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string_view::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    if (++seen[key] > 1)
      throw Error(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    entries.emplace_back(key, value);
  }

  PipelineConfig cfg;
  for (const auto& [key, value] : entries)
    if (key == "unit_kind") {
      if (value == "year")
        cfg.unit_kind = UnitKind::year;
      else if (value == "day")
        cfg.unit_kind = UnitKind::day;
      else
        throw Error("config: unit_kind must be 'year' or 'day', got '" + value + "'");
    }

  for (const auto& [key, value] : entries) {
    if (key == "unit_kind") {
    } else if (key == "corpus") {
      for (const auto part : split(value, ','))
        if (!trim(part).empty()) cfg.corpus.emplace_back(trim(part));
    } else if (key == "unit_min") {
      cfg.unit_min = detail::parse_unit_bound(value, cfg.unit_kind, key);
    } else if (key == "unit_max") {
      cfg.unit_max = detail::parse_unit_bound(value, cfg.unit_kind, key);
    } else if (key == "stoplist") {
      cfg.stoplist = value;
    } else if (key == "excluded_pos") {
      for (const auto part : split(value, ','))
        if (!trim(part).empty()) cfg.excluded_pos.emplace_back(trim(part));
    } else if (key == "mwu_enabled") {
      cfg.mwu_enabled = detail::parse_bool(value, key);
    } else if (key == "mwu_ppmi_threshold") {
      cfg.mwu_ppmi_threshold = to_double(value, key);
    } else if (key == "mwu_subspan_len") {
      cfg.mwu_subspan_len = static_cast<int>(to_int64(value, key));
    } else if (key == "span_len") {
      cfg.span_len = static_cast<int>(to_int64(value, key));
    } else if (key == "min_log_change") {
      cfg.min_log_change = to_double(value, key);
    } else if (key == "min_t2_count") {
      cfg.min_t2_count = to_int64(value, key);
    } else if (key == "min_t2_coverage") {
      cfg.min_t2_coverage = to_double(value, key);
    } else if (key == "max_peak_z") {
      cfg.max_peak_z = to_double(value, key);
    } else if (key == "direction") {
      if (value == "increase")
        cfg.direction = Direction::increase;
      else if (value == "decrease")
        cfg.direction = Direction::decrease;
      else
        throw Error("config: direction must be 'increase' or 'decrease', got '" + value + "'");
    } else if (key == "twitter_mode") {
      cfg.twitter_mode = detail::parse_bool(value, key);
    } else if (key == "min_user_ratio") {
      cfg.min_user_ratio = to_double(value, key);
    } else if (key == "semantic_window") {
      cfg.semantic_window = static_cast<int>(to_int64(value, key));
    } else if (key == "topic_window") {
      cfg.topic_window = static_cast<int>(to_int64(value, key));
    } else if (key == "lsa_k") {
      cfg.lsa_k = static_cast<int>(to_int64(value, key));
    } else if (key == "min_token_count") {
      cfg.min_token_count = to_int64(value, key);
    } else if (key == "topic_k") {
      cfg.topic_k = static_cast<int>(to_int64(value, key));
    } else if (key == "min_neighbor_coverage") {
      cfg.min_neighbor_coverage = to_double(value, key);
    } else if (key == "neighbor_edit_range") {
      cfg.neighbor_edit_range = static_cast<int>(to_int64(value, key));
    } else if (key == "randomize_r") {
      cfg.randomize_r = static_cast<int>(to_int64(value, key));
    } else if (key == "alpha") {
      cfg.alpha = to_double(value, key);
    } else if (key == "include_exhausted") {
      cfg.include_exhausted = detail::parse_bool(value, key);
    } else if (key == "zscore_predictors") {
      cfg.zscore_predictors = detail::parse_bool(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_int64(value, key));
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "cache_dir") {
      cfg.cache_dir = value;
    } else {
      throw Error("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

}  // namespace lexcomp
