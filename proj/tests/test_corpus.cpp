#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lexcomp/corpus.hpp"

using namespace lexcomp;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::vector<std::vector<TokenEvent>> drain(CorpusStream& st) {
  std::vector<std::vector<TokenEvent>> docs;
  std::vector<TokenEvent> doc;
  while (st.next_document(doc)) docs.push_back(doc);
  return docs;
}

}  // namespace

TEST_CASE("date parsing handles years, full dates, and rejects garbage") {
  CHECK(parse_time_unit("1984", UnitKind::year) == 1984);
  CHECK(parse_time_unit("2011-03-05", UnitKind::year) == 2011);
  CHECK(parse_time_unit("1970-01-01", UnitKind::day) == 0);
  CHECK(parse_time_unit("1970-01-02", UnitKind::day) == 1);
  CHECK(parse_time_unit("1969-12-31", UnitKind::day) == -1);
  CHECK(parse_time_unit("2000-03-01", UnitKind::day) == 11017);
  CHECK_THROWS_AS(parse_time_unit("1984", UnitKind::day), Error);
  CHECK_THROWS_AS(parse_time_unit("84", UnitKind::year), Error);
  CHECK_THROWS_AS(parse_time_unit("1984-13-01", UnitKind::year), Error);
  CHECK_THROWS_AS(parse_time_unit("1984/01/01", UnitKind::year), Error);
}

TEST_CASE("civil day arithmetic matches known anchors") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(2000, 1, 1) == 10957);
  CHECK(days_from_civil(1900, 1, 1) == -25567);
  // leap handling: 2000-02-29 exists
  CHECK(days_from_civil(2000, 3, 1) - days_from_civil(2000, 2, 28) == 2);
  CHECK(days_from_civil(1900, 3, 1) - days_from_civil(1900, 2, 28) == 1);
}

TEST_CASE("lemma cleaning lowercases and strips ASCII punctuation only") {
  CHECK(clean_lemma("Hello") == "hello");
  CHECK(clean_lemma("don't") == "dont");
  CHECK(clean_lemma("e-mail") == "email");
  CHECK(clean_lemma("#tag") == "tag");
  CHECK(clean_lemma("...") == "");
  CHECK(clean_lemma("Ab3") == "ab3");
  CHECK(clean_lemma("caf\xc3\xa9") == "caf\xc3\xa9");  // non-ASCII untouched
  CHECK(clean_lemma(" a b ") == "ab");
}

TEST_CASE("corpus stream filters in documented order and keeps stats") {
  const std::string jsonl =
      R"({"date": "1900", "tokens": [["The","DET"],["Cat","NOUN"],["@bob","X"],["...","PUNCT"],["sat","VERB"]]})"
      "\n"
      R"({"date": "1899", "tokens": [["old","ADJ"]]})"
      "\n"
      "\n"
      R"({"date": "1901", "author": "u1", "tokens": [["dog","NOUN"],["the","DET"]]})"
      "\n";
  const auto path = write_temp("lexcomp_corpus_basic.jsonl", jsonl);
  CorpusManifest mf;
  mf.unit_min = 1900;
  mf.unit_max = 1910;
  mf.stopwords = {"the"};
  mf.excluded_pos = {"PUNCT"};
  CorpusStream st(path, mf);
  const auto docs = drain(st);

  REQUIRE(docs.size() == 2);
  REQUIRE(docs[0].size() == 2);
  CHECK(docs[0][0].lemma == "cat");
  CHECK(docs[0][1].lemma == "sat");
  CHECK(docs[0][0].time_unit == 1900);
  CHECK(docs[0][0].author == "");
  CHECK(docs[0][0].doc_id == 0);
  REQUIRE(docs[1].size() == 1);
  CHECK(docs[1][0].lemma == "dog");
  CHECK(docs[1][0].author == "u1");
  CHECK(docs[1][0].doc_id == 1);

  const auto& s = st.stats();
  CHECK(s.documents == 2);
  CHECK(s.documents_out_of_range == 1);
  CHECK(s.input_tokens == 8);  // 5 + 1 (out of range) + 2
  CHECK(s.kept_tokens == 3);
  CHECK(s.dropped_pos == 1);      // "..." by PUNCT before mention/clean checks
  CHECK(s.dropped_mention == 1);  // @bob
  CHECK(s.dropped_stopword == 2); // "The" -> "the", and "the"
  CHECK(s.dropped_empty == 0);
}

TEST_CASE("excluded POS wins over mention and cleaning") {
  const auto path = write_temp(
      "lexcomp_corpus_order.jsonl",
      R"({"date": "1900", "tokens": [["@x","BAD"],["!!!","BAD"],["@y","OK"],["???","OK"]]})"
      "\n");
  CorpusManifest mf;
  mf.unit_min = 1900;
  mf.unit_max = 1900;
  mf.excluded_pos = {"BAD"};
  CorpusStream st(path, mf);
  std::vector<TokenEvent> doc;
  REQUIRE(st.next_document(doc));
  CHECK(doc.empty());
  CHECK(st.stats().dropped_pos == 2);
  CHECK(st.stats().dropped_mention == 1);
  CHECK(st.stats().dropped_empty == 1);
}

TEST_CASE("malformed input errors name the file and line") {
  CorpusManifest mf;
  mf.unit_min = 1900;
  mf.unit_max = 1910;
  std::vector<TokenEvent> doc;

  auto expect_error_with = [&](const std::string& name, const std::string& body,
                               const std::string& needle) {
    const auto path = write_temp(name, body);
    CorpusStream st(path, mf);
    try {
      st.next_document(doc);
      FAIL("expected an error for " << name);
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":1: ") != std::string::npos);
      CHECK(msg.find(needle) != std::string::npos);
    }
  };

  expect_error_with("lexcomp_bad_json.jsonl", "{not json}\n", "malformed JSON");
  expect_error_with("lexcomp_bad_date.jsonl", R"({"tokens": []})" "\n", "date");
  expect_error_with("lexcomp_bad_tokens.jsonl", R"({"date": "1900"})" "\n", "tokens");
  expect_error_with("lexcomp_bad_pair.jsonl",
                    R"({"date": "1900", "tokens": [["only_lemma"]]})" "\n", "string pairs");
  expect_error_with("lexcomp_bad_author.jsonl",
                    R"({"date": "1900", "author": 7, "tokens": []})" "\n", "author");
  CHECK_THROWS_AS(CorpusStream("/nonexistent/nope.jsonl", mf), Error);
}

TEST_CASE("day-unit corpora resolve full dates to day numbers") {
  const auto path = write_temp(
      "lexcomp_corpus_day.jsonl",
      R"({"date": "2012-01-01", "tokens": [["a","N"]]})" "\n"
      R"({"date": "2012-01-03", "tokens": [["b","N"]]})" "\n");
  CorpusManifest mf;
  mf.unit_kind = UnitKind::day;
  mf.unit_min = days_from_civil(2012, 1, 1);
  mf.unit_max = days_from_civil(2012, 12, 31);
  CorpusStream st(path, mf);
  const auto docs = drain(st);
  REQUIRE(docs.size() == 2);
  CHECK(docs[1][0].time_unit - docs[0][0].time_unit == 2);
}

TEST_CASE("stoplist loads and matches cleaned lemmas") {
  const auto sl = write_temp("lexcomp_stop.txt", "the\n  of \n\nand\n");
  const auto stops = load_stoplist(sl);
  CHECK(stops.size() == 3);
  CHECK(stops.count("of") == 1);
  CHECK_THROWS_AS(load_stoplist("/nonexistent/stop.txt"), Error);
}
