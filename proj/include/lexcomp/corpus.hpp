#pragma once

// Corpus ingestion: JSONL documents of (lemma, POS) tokens with a date and
// optional author id. Produces a filtered, normalized token-event stream.

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lexcomp/util.hpp"

namespace lexcomp {

enum class UnitKind { year, day };

struct TokenEvent {
  std::string lemma;
  int time_unit = 0;
  std::int64_t doc_id = 0;
  std::string author;  // empty when absent
};

struct CorpusManifest {
  UnitKind unit_kind = UnitKind::year;
  int unit_min = 0;
  int unit_max = 0;
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> excluded_pos;
};

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm), used when the time unit is a day.
inline int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

// "YYYY" or "YYYY-MM-DD" -> time unit (year number or day number).
inline int parse_time_unit(std::string_view date, UnitKind kind) {
  auto digits = [](std::string_view s) {
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return !s.empty();
  };
  if (date.size() == 4 && digits(date)) {
    if (kind == UnitKind::day)
      throw Error("date '" + std::string(date) + "' lacks month/day but unit_kind is day");
    return static_cast<int>(to_int64(date, "date"));
  }
  if (date.size() == 10 && date[4] == '-' && date[7] == '-' &&
      digits(date.substr(0, 4)) && digits(date.substr(5, 2)) && digits(date.substr(8, 2))) {
    const int y = static_cast<int>(to_int64(date.substr(0, 4), "date"));
    const int m = static_cast<int>(to_int64(date.substr(5, 2), "date"));
    const int d = static_cast<int>(to_int64(date.substr(8, 2), "date"));
    if (m < 1 || m > 12 || d < 1 || d > 31)
      throw Error("date '" + std::string(date) + "' out of range");
    return kind == UnitKind::year ? y : days_from_civil(y, m, d);
  }
  throw Error("unrecognized date '" + std::string(date) + "' (want YYYY or YYYY-MM-DD)");
}

// Lowercase ASCII letters, strip ASCII punctuation/symbols/whitespace.
// Digits and bytes >= 0x80 (multi-byte UTF-8) pass through unchanged.
inline std::string clean_lemma(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c >= 0x80) {
      out.push_back(ch);
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      out.push_back(ch);
    }
    // everything else (punctuation incl. '#' and '-', spaces, controls) dropped
  }
  return out;
}

inline std::unordered_set<std::string> load_stoplist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stoplist '" + path + "'");
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) out.insert(std::string(t));
  }
  return out;
}

struct CorpusStats {
  std::int64_t documents = 0;
  std::int64_t documents_out_of_range = 0;
  std::int64_t input_tokens = 0;
  std::int64_t kept_tokens = 0;
  std::int64_t dropped_pos = 0;
  std::int64_t dropped_mention = 0;  // '@'-initial lemmas
  std::int64_t dropped_empty = 0;    // empty after normalization
  std::int64_t dropped_stopword = 0;

  void accumulate(const CorpusStats& o) {
    documents += o.documents;
    documents_out_of_range += o.documents_out_of_range;
    input_tokens += o.input_tokens;
    kept_tokens += o.kept_tokens;
    dropped_pos += o.dropped_pos;
    dropped_mention += o.dropped_mention;
    dropped_empty += o.dropped_empty;
    dropped_stopword += o.dropped_stopword;
  }
};

// Streaming reader over one JSONL file. Documents outside the unit range are
// skipped (counted); malformed lines raise an error naming file and line.
class CorpusStream {
 public:
  CorpusStream(const std::string& path, const CorpusManifest& mf, std::int64_t base_doc_id = 0)
      : path_(path), in_(path), mf_(&mf), next_doc_id_(base_doc_id) {
    if (!in_) throw Error("cannot open corpus '" + path + "'");
  }

  // Fills `out` with the next in-range document's filtered events.
  // Returns false at end of file.
  bool next_document(std::vector<TokenEvent>& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      if (parse_line(line, out)) return true;
    }
    return false;
  }

  const CorpusStats& stats() const { return stats_; }
  std::int64_t next_doc_id() const { return next_doc_id_; }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  bool parse_line(const std::string& line, std::vector<TokenEvent>& out) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("document is not a JSON object");
    if (!doc.contains("date") || !doc["date"].is_string()) fail("missing string field 'date'");
    if (!doc.contains("tokens") || !doc["tokens"].is_array()) fail("missing array field 'tokens'");

    int unit = 0;
    try {
      unit = parse_time_unit(doc["date"].get<std::string>(), mf_->unit_kind);
    } catch (const Error& e) {
      fail(e.what());
    }
    std::string author;
    if (doc.contains("author")) {
      if (!doc["author"].is_string()) fail("field 'author' must be a string");
      author = doc["author"].get<std::string>();
    }

    const auto& toks = doc["tokens"];
    if (unit < mf_->unit_min || unit > mf_->unit_max) {
      ++stats_.documents_out_of_range;
      stats_.input_tokens += static_cast<std::int64_t>(toks.size());
      return false;
    }

    out.clear();
    out.reserve(toks.size());
    const std::int64_t doc_id = next_doc_id_++;
    for (const auto& t : toks) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string())
        fail("token entries must be [\"lemma\", \"POS\"] string pairs");
      ++stats_.input_tokens;
      const std::string& lemma = t[0].get_ref<const std::string&>();
      const std::string& pos = t[1].get_ref<const std::string&>();
      if (mf_->excluded_pos.count(pos)) {
        ++stats_.dropped_pos;
        continue;
      }
      if (!lemma.empty() && lemma[0] == '@') {
        ++stats_.dropped_mention;
        continue;
      }
      std::string cleaned = clean_lemma(lemma);
      if (cleaned.empty()) {
        ++stats_.dropped_empty;
        continue;
      }
      if (mf_->stopwords.count(cleaned)) {
        ++stats_.dropped_stopword;
        continue;
      }
      ++stats_.kept_tokens;
      out.push_back(TokenEvent{std::move(cleaned), unit, doc_id, author});
    }
    ++stats_.documents;
    return true;
  }

  std::string path_;
  std::ifstream in_;
  const CorpusManifest* mf_;
  std::int64_t line_no_ = 0;
  std::int64_t next_doc_id_ = 0;
  CorpusStats stats_;
};

}  // namespace lexcomp
