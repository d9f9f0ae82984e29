#include <doctest.h>

#include "scenewatch/config.hpp"
#include "scenewatch/error.hpp"
#include "scenewatch/vocabulary.hpp"

using namespace scenewatch;

namespace {

QueryVocabulary reference_vocabulary() {
  return load_vocabulary_file(data_dir() / "vocabulary" / "reference.json");
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("reference vocabulary shape") {
  const auto vocab = reference_vocabulary();
  CHECK(vocab.normal().size() == 73);
  CHECK(vocab.anomaly().size() == 12);
  CHECK(vocab.version() == "1");
  const auto groups = vocab.normal_groups();
  REQUIRE(groups.size() == 3);
  CHECK(groups[0] == "common_road_objects");
  CHECK(groups[1] == "infrastructure_and_signage");
  CHECK(groups[2] == "others");
  for (const auto& e : vocab.anomaly()) CHECK(e.group == "edge_cases");
}

TEST_CASE("query bundle resolves indices") {
  const auto bundle = compose_queries(reference_vocabulary());
  CHECK(bundle.resolve(QueryKind::Anomaly, 4) == "maintenance truck carrying portable traffic lights");
  CHECK(bundle.normal_prompt.size() == 73);
  CHECK(code_of([&] { bundle.resolve(QueryKind::Anomaly, 12); }) == ErrorCode::UnresolvableQueryIndex);
  CHECK(code_of([&] { bundle.resolve(QueryKind::Normal, 73); }) == ErrorCode::UnresolvableQueryIndex);
}

TEST_CASE("duplicates are rejected case-insensitively across lists") {
  CHECK(code_of([] { load_vocabulary(R"({"a": ["Car", "car"], "edge_cases": ["x"]})"); }) ==
        ErrorCode::DuplicatePhrase);
  CHECK(code_of([] { load_vocabulary(R"({"a": ["Car"], "edge_cases": ["CAR"]})"); }) ==
        ErrorCode::DuplicatePhrase);
  try {
    load_vocabulary(R"({"a": ["Bus", "Tram"], "b": ["tram"], "edge_cases": ["x"]})");
    FAIL("expected DuplicatePhrase");
  } catch (const Error& e) {
    CHECK(e.detail() == "tram");
  }
}

TEST_CASE("malformed and empty documents") {
  CHECK(code_of([] { load_vocabulary("[1, 2]"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { load_vocabulary("{"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { load_vocabulary(R"({"a": ["Car"]})"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { load_vocabulary(R"({"a": [" Car"], "edge_cases": ["x"]})"); }) ==
        ErrorCode::MalformedDocument);
  CHECK(code_of([] { load_vocabulary(R"({"a": ["Car\nBus"], "edge_cases": ["x"]})"); }) ==
        ErrorCode::MalformedDocument);
  CHECK(code_of([] { load_vocabulary(R"({"a": [], "edge_cases": ["x"]})"); }) == ErrorCode::EmptyVocabulary);
  CHECK(code_of([] { load_vocabulary(R"({"a": ["Car"], "edge_cases": []})"); }) == ErrorCode::EmptyVocabulary);
}

TEST_CASE("comments, private keys and document order") {
  const auto vocab = load_vocabulary(R"({
    // leading comment
    "_note": "ignored",
    "zeta": ["Tram"],
    "alpha": ["Bus", "Car"],
    "edge_cases": ["odd thing"],
    "version": 7
  })");
  CHECK(vocab.normal_queries() == std::vector<std::string>{"Tram", "Bus", "Car"});
  CHECK(vocab.normal_groups() == std::vector<std::string>{"zeta", "alpha"});
  CHECK(vocab.version() == "7");
}

TEST_CASE("render round-trips") {
  const auto vocab = reference_vocabulary();
  CHECK(load_vocabulary(render_vocabulary(vocab)) == vocab);
}

TEST_CASE("query kind names") {
  CHECK(to_string(QueryKind::Normal) == "normal");
  CHECK(parse_query_kind("ANOMALY") == QueryKind::Anomaly);
  CHECK_FALSE(parse_query_kind("other").has_value());
}
