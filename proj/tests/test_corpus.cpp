#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dst/corpus.hpp"

using namespace dst;
namespace fs = std::filesystem;

namespace {

Dialogue fixture_dialogue() {
  Dialogue d;
  d.id = "d1";
  Turn t0;
  t0.index = 0;
  t0.system_acts = {{"welcomemsg", std::nullopt}};
  t0.user_utterance = "i want a cheap indian restaurant";
  t0.user_tokens = normalize(t0.user_utterance);
  t0.gold = {{"food", {"indian"}}, {"area", {}}, {"pricerange", {"cheap"}}};
  Turn t1;
  t1.index = 1;
  t1.system_acts = {{"request", "area"}};
  t1.user_utterance = "in the north please";
  t1.user_tokens = normalize(t1.user_utterance);
  t1.slu = {{"area", "north"}};
  t1.gold = {{"food", {"indian"}}, {"area", {"north"}}, {"pricerange", {"cheap"}}};
  d.turns = {t0, t1};
  return d;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dst_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string join(const std::vector<std::string>& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += ' ';
    s += toks[i];
  }
  return s;
}

}  // namespace

TEST_CASE("normalize") {
  CHECK(normalize("I want a cheap Indian restaurant") ==
        std::vector<std::string>{"i", "want", "a", "cheap", "indian",
                                 "restaurant"});
  CHECK(normalize("") == std::vector<std::string>{});
  CHECK(normalize("thai!") == std::vector<std::string>{"thai"});
  CHECK(normalize("  What's   UP??  ") ==
        std::vector<std::string>{"what's", "up"});
}

TEST_CASE("normalize is idempotent") {
  std::mt19937_64 rng(4);
  const std::string alphabet = "aB !?.,'xY-";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    std::size_t len = rng() % 40;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    auto once = normalize(s);
    CHECK(normalize(join(once)) == once);
  }
}

TEST_CASE("internal json round trip") {
  TempDir tmp;
  std::vector<Dialogue> corpus{fixture_dialogue()};
  std::string path = (tmp.path / "c.json").string();
  write_internal_json(path, corpus);
  Schema schema;
  auto parsed = parse_corpus(path, CorpusFormat::kInternalJson, &schema);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == corpus[0]);
  CHECK(schema.slots == std::vector<std::string>{"area", "food", "pricerange"});

  // serialize(parse(serialize(x))) is stable
  CHECK(to_internal_json(parsed) == to_internal_json(corpus));
}

TEST_CASE("internal json errors") {
  TempDir tmp;
  std::string bad = (tmp.path / "bad.json").string();
  std::ofstream(bad) << "{not json";
  Schema schema;
  CHECK_THROWS_AS(parse_corpus(bad, CorpusFormat::kInternalJson, &schema),
                  ParseError);

  // gold missing a schema slot
  std::string missing = (tmp.path / "missing.json").string();
  std::ofstream(missing) << R"({"dialogues":[{"id":"x","turns":[
    {"index":0,"system_acts":[],"user_utterance":"hi","slu":[],
     "gold":{"food":"none"}}]}]})";
  Schema s2;
  s2.slots = {"food", "area"};
  CHECK_THROWS_AS(parse_corpus(missing, CorpusFormat::kInternalJson, &s2),
                  SchemaError);
}

TEST_CASE("multi-value gold parses as a set and serializes back") {
  TempDir tmp;
  std::string path = (tmp.path / "mv.json").string();
  std::ofstream(path) << R"({"dialogues":[{"id":"x","turns":[
    {"index":0,"system_acts":[],"user_utterance":"chinese or thai","slu":[],
     "gold":{"food":["chinese","thai"]}}]}]})";
  Schema schema;
  auto parsed = parse_corpus(path, CorpusFormat::kInternalJson, &schema);
  CHECK(parsed[0].turns[0].gold.at("food") ==
        std::set<std::string>{"chinese", "thai"});
  std::string out = (tmp.path / "mv2.json").string();
  write_internal_json(out, parsed);
  Schema s2;
  CHECK(parse_corpus(out, CorpusFormat::kInternalJson, &s2) == parsed);
}

TEST_CASE("dstc2 layout reader") {
  TempDir tmp;
  fs::path call = tmp.path / "Mar13_S0A0" / "voip-1";
  fs::create_directories(call);
  std::ofstream(call / "log.json") << R"({
    "session-id": "voip-1",
    "turns": [
      {"output": {"dialog-acts": [{"act": "welcomemsg", "slots": []}]},
       "input": {"live": {"slu-hyps": [
         {"slu-hyp": [{"act": "inform", "slots": [["food", "indian"]]}], "score": 0.9},
         {"slu-hyp": [{"act": "inform", "slots": [["food", "indian"]]}], "score": 0.1}]}}},
      {"output": {"dialog-acts": [
         {"act": "inform", "slots": [["pricerange", "cheap"]]},
         {"act": "request", "slots": [["slot", "area"]]},
         {"act": "expl-conf", "slots": [["food", "dontcare"]]}]},
       "input": {"live": {"slu-hyps": []}}}
    ]})";
  std::ofstream(call / "label.json") << R"({
    "turns": [
      {"turn-index": 0, "transcription": "cheap indian food",
       "goal-labels": {"food": "indian", "pricerange": "cheap"}},
      {"turn-index": 1, "transcription": "it does not matter",
       "goal-labels": {"food": "dontcare", "pricerange": "cheap"}}
    ]})";

  Schema schema;
  auto parsed = parse_corpus(tmp.path.string(), CorpusFormat::kDstc2Json, &schema);
  REQUIRE(parsed.size() == 1);
  const Dialogue& d = parsed[0];
  CHECK(d.id == "voip-1");
  REQUIRE(d.turns.size() == 2);

  // delexicalization: values dropped, request slot lifted, dontcare kept
  const Turn& t1 = d.turns[1];
  REQUIRE(t1.system_acts.size() == 3);
  CHECK(t1.system_acts[0].render() == "inform(pricerange)");
  CHECK(t1.system_acts[1].render() == "request(area)");
  CHECK(t1.system_acts[2].render() == "expl-conf(food=dontcare)");

  CHECK(d.turns[0].slu ==
        std::vector<std::pair<std::string, std::string>>{{"food", "indian"}});
  CHECK(d.turns[0].gold.at("food") == std::set<std::string>{"indian"});
  CHECK(d.turns[0].gold.at("area").empty());
  CHECK(t1.gold.at("food") == std::set<std::string>{kDontcare});

  // every schema slot covered at every turn
  for (const Turn& t : d.turns)
    for (const std::string& s : schema.slots) CHECK(t.gold.count(s) == 1);
}

TEST_CASE("split sizes and determinism") {
  std::vector<Dialogue> many;
  for (int i = 0; i < 2118; ++i) {
    Dialogue d;
    d.id = "d" + std::to_string(i);
    many.push_back(d);
  }
  CorpusSplit s = split_corpus(many, 0.1, 1);
  CHECK(s.dev.size() == 212);
  CHECK(s.train.size() == 1906);

  CorpusSplit s2 = split_corpus(many, 0.1, 1);
  REQUIRE(s2.dev.size() == s.dev.size());
  for (std::size_t i = 0; i < s.dev.size(); ++i)
    CHECK(s.dev[i].id == s2.dev[i].id);

  // partition: no id in both sides, all ids accounted for
  std::set<std::string> ids;
  for (const auto& d : s.train) ids.insert(d.id);
  for (const auto& d : s.dev) CHECK(ids.insert(d.id).second);
  CHECK(ids.size() == many.size());

  std::vector<Dialogue> ten(many.begin(), many.begin() + 10);
  CHECK(split_corpus(ten, 0.1, 99).dev.size() == 1);

  std::vector<Dialogue> one(many.begin(), many.begin() + 1);
  CHECK_THROWS_AS(split_corpus(one, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(ten, 0.0, 1), std::invalid_argument);
}

TEST_CASE("corpus stats") {
  Dialogue d = fixture_dialogue();
  Turn t2 = d.turns[1];
  t2.index = 2;
  t2.gold["area"] = {kDontcare};
  d.turns.push_back(t2);
  Schema schema;
  schema.slots = {"area", "food", "pricerange"};
  CorpusStats st = corpus_stats({d}, schema);
  CHECK(st.dialogue_count == 1);
  CHECK(st.turn_count == 3);
  CHECK(st.mean_turns == doctest::Approx(3.0));
  CHECK(st.distinct_values.at("food") == 1);
  CHECK(st.distinct_values.at("area") == 1);            // north
  CHECK(st.distinct_values_with_sentinels.at("area") == 3);  // none+north+dontcare
}
