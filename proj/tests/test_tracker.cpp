#include "doctest.h"

#include <cmath>
#include <random>

#include "dst/eval.hpp"
#include "dst/tracker.hpp"
#include "test_util.hpp"

using namespace dst;

namespace {

Schema two_slots() {
  Schema s;
  s.slots = {"area", "food"};
  return s;
}

Dialogue one_turn(const std::string& utterance) {
  Dialogue d;
  d.id = "d";
  Turn t;
  t.index = 0;
  t.user_utterance = utterance;
  t.user_tokens = normalize(utterance);
  t.gold = {{"area", {}}, {"food", {}}};
  d.turns = {t};
  return d;
}

DialogueState state(std::set<std::string> area, std::set<std::string> food) {
  DialogueState s;
  s.values = {{"area", std::move(area)}, {"food", std::move(food)}};
  return s;
}

Prediction pred(const std::string& text, int position, double score,
                const std::string& slot = "food") {
  Prediction p;
  p.candidate = {text, position < 0 ? CandidateSource::kDontcare
                                    : CandidateSource::kNgram,
                 position};
  p.slot = slot;
  p.score = score;
  p.positive = true;
  return p;
}

}  // namespace

TEST_CASE("dialogue state basics") {
  Schema schema = two_slots();
  DialogueState s = DialogueState::all_none(schema);
  CHECK(s.status("area") == SlotStatus::kNone);
  s.values["area"] = {kDontcare};
  CHECK(s.status("area") == SlotStatus::kDontcare);
  s.values["food"] = {"thai"};
  CHECK(s.status("food") == SlotStatus::kFilled);

  // joint key is canonical: value-set order does not matter
  DialogueState a = state({}, {"thai", "chinese"});
  DialogueState b = state({}, {"chinese", "thai"});
  CHECK(a.joint_key() == b.joint_key());
  CHECK(a.joint_key() != state({}, {"thai"}).joint_key());
}

TEST_CASE("zero-weight classifier scores exactly 0.5") {
  Dialogue d = one_turn("a b");
  Model m = testutil::tiny_model({d}, two_slots(), 1, /*init=*/false);
  Candidate c{"a", CandidateSource::kNgram, 0};
  DialogueState prev = DialogueState::all_none(two_slots());
  CHECK(score_candidate(m, c, d.turns[0], {}, prev, "food") == 0.5);
}

TEST_CASE("scoring is deterministic in eval mode, stochastic in train mode") {
  Dialogue d = one_turn("a b");
  Model m = testutil::tiny_model({d}, two_slots(), 3);
  Candidate c{"a", CandidateSource::kNgram, 0};
  DialogueState prev = DialogueState::all_none(two_slots());
  double s1 = score_candidate(m, c, d.turns[0], {}, prev, "food");
  double s2 = score_candidate(m, c, d.turns[0], {}, prev, "food");
  CHECK(s1 == s2);

  std::mt19937_64 r1(1), r2(2);
  double t1 = score_candidate(m, c, d.turns[0], {}, prev, "food", true, &r1);
  double t2 = score_candidate(m, c, d.turns[0], {}, prev, "food", true, &r2);
  CHECK(t1 != t2);  // different dropout masks
}

TEST_CASE("open vocabulary: nonce candidates score without error") {
  Dialogue d = one_turn("a b");
  Model m = testutil::tiny_model({d}, two_slots(), 3);
  Candidate c{"zzyzx qwfp", CandidateSource::kNgram, 0};
  DialogueState prev = DialogueState::all_none(two_slots());
  double s = score_candidate(m, c, d.turns[0], {}, prev, "food");
  CHECK(s > 0.0);
  CHECK(s < 1.0);
}

TEST_CASE("slots are classified independently") {
  Dialogue d = one_turn("a b");
  Schema schema = two_slots();
  Model m = testutil::tiny_model({d}, schema, 3);
  Candidate c{"a", CandidateSource::kNgram, 0};
  DialogueState prev = DialogueState::all_none(schema);
  double before = score_candidate(m, c, d.turns[0], {}, prev, "area");

  // perturb everything owned by the other slot
  for (Param* p : {&m.heads[1].w1, &m.heads[1].b1, &m.heads[1].w2, &m.heads[1].b2,
                   &m.heads[1].w3, &m.heads[1].b3, &m.state_emb[1]})
    for (double& v : p->value.data) v += 0.37;

  CHECK(score_candidate(m, c, d.turns[0], {}, prev, "area") == before);
  CHECK(score_candidate(m, c, d.turns[0], {}, prev, "food") != before);
}

TEST_CASE("update_state: carry-over when nothing fires") {
  DialogueState prev = state({"north"}, {"thai"});
  for (auto strategy :
       {UpdateStrategy::kOrderedOverwrite, UpdateStrategy::kArgmaxSingle,
        UpdateStrategy::kMultiValue}) {
    CHECK(update_state(prev, {}, strategy) == prev);
    // a non-positive prediction changes nothing either
    Prediction p = pred("cheap", 0, 0.9);
    p.positive = false;
    CHECK(update_state(prev, {p}, strategy) == prev);
  }
}

TEST_CASE("update_state strategies on the two-positive example") {
  // "cheap" at position 2 scoring 0.9, "expensive" at position 6 scoring 0.7
  DialogueState prev = state({}, {});
  std::vector<Prediction> preds{pred("expensive", 6, 0.7), pred("cheap", 2, 0.9)};

  DialogueState ordered =
      update_state(prev, preds, UpdateStrategy::kOrderedOverwrite);
  CHECK(ordered.values.at("food") == std::set<std::string>{"expensive"});

  DialogueState argmax = update_state(prev, preds, UpdateStrategy::kArgmaxSingle);
  CHECK(argmax.values.at("food") == std::set<std::string>{"cheap"});

  DialogueState multi = update_state(prev, preds, UpdateStrategy::kMultiValue);
  CHECK(multi.values.at("food") ==
        std::set<std::string>{"cheap", "expensive"});
}

TEST_CASE("argmax ties break toward the earlier position") {
  std::vector<Prediction> preds{pred("b", 4, 0.8), pred("a", 1, 0.8)};
  DialogueState s =
      update_state(state({}, {}), preds, UpdateStrategy::kArgmaxSingle);
  CHECK(s.values.at("food") == std::set<std::string>{"a"});
}

TEST_CASE("argmax always yields at most one value per slot") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Prediction> preds;
    std::size_t n = rng() % 6;
    for (std::size_t i = 0; i < n; ++i)
      preds.push_back(pred("v" + std::to_string(rng() % 4),
                           static_cast<int>(rng() % 8),
                           (rng() % 100) / 100.0));
    DialogueState s = update_state(state({}, {"old"}), preds,
                                   UpdateStrategy::kArgmaxSingle);
    CHECK(s.values.at("food").size() <= 1);
  }
}

TEST_CASE("multi-value: concrete values beat dontcare") {
  std::vector<Prediction> both{pred("thai", 0, 0.9), pred(kDontcare, -1, 0.95)};
  DialogueState s =
      update_state(state({}, {}), both, UpdateStrategy::kMultiValue);
  CHECK(s.values.at("food") == std::set<std::string>{"thai"});

  std::vector<Prediction> only_dc{pred(kDontcare, -1, 0.6)};
  DialogueState s2 =
      update_state(state({}, {"thai"}), only_dc, UpdateStrategy::kMultiValue);
  CHECK(s2.values.at("food") == std::set<std::string>{kDontcare});
}

TEST_CASE("ordered overwrite applies dontcare first") {
  // dontcare sits at position -1, so any positive ngram overwrites it
  std::vector<Prediction> preds{pred(kDontcare, -1, 0.99), pred("thai", 3, 0.6)};
  DialogueState s =
      update_state(state({}, {}), preds, UpdateStrategy::kOrderedOverwrite);
  CHECK(s.values.at("food") == std::set<std::string>{"thai"});
}

TEST_CASE("track_dialogue: below-threshold scores keep every slot none") {
  Dialogue d = one_turn("a b");
  Model m = testutil::tiny_model({d}, two_slots(), 1, /*init=*/false);
  // zero weights put every logit at b3
  double logit_04 = std::log(0.4 / 0.6);
  for (SlotHead& h : m.heads) h.b3.value.data[0] = logit_04;

  TrackConfig cfg{{CandidateMode::kNgram, 1}, UpdateStrategy::kOrderedOverwrite,
                  0.5};
  auto states = track_dialogue(m, d, cfg);
  REQUIRE(states.size() == 1);
  CHECK(states[0] == DialogueState::all_none(two_slots()));
}

TEST_CASE("track_dialogue: hand-traced all-positive model") {
  // With every logit pushed positive, each strategy has a closed-form
  // result on the utterance "a b" with unigram candidates.
  Dialogue d = one_turn("a b");
  Schema schema = two_slots();

  auto make = [&] {
    Model m = testutil::tiny_model({d}, schema, 1, /*init=*/false);
    for (SlotHead& h : m.heads) h.b3.value.data[0] = 10.0;
    return m;
  };

  Model m1 = make();
  auto ordered = track_dialogue(
      m1, d, {{CandidateMode::kNgram, 1}, UpdateStrategy::kOrderedOverwrite, 0.5});
  CHECK(ordered[0] == state({"b"}, {"b"}));  // last position wins

  Model m2 = make();
  auto argmax = track_dialogue(
      m2, d, {{CandidateMode::kNgram, 1}, UpdateStrategy::kArgmaxSingle, 0.5});
  // equal scores tie toward the earliest position, i.e. dontcare
  CHECK(argmax[0] == state({kDontcare}, {kDontcare}));

  Model m3 = make();
  auto multi = track_dialogue(
      m3, d, {{CandidateMode::kNgram, 1}, UpdateStrategy::kMultiValue, 0.5});
  CHECK(multi[0] == state({"a", "b"}, {"a", "b"}));
}

TEST_CASE("track_dialogue handles empty dialogues and carries state") {
  Schema schema = two_slots();
  Dialogue empty;
  empty.id = "e";
  Model m = testutil::tiny_model({one_turn("a b")}, schema, 1, false);
  TrackConfig cfg{{CandidateMode::kNgram, 1}, UpdateStrategy::kOrderedOverwrite,
                  0.5};
  CHECK(track_dialogue(m, empty, cfg).empty());

  // two turns; all logits negative -> turn 2 carries turn 1's state (none)
  Dialogue d = one_turn("a b");
  Turn t1 = d.turns[0];
  t1.index = 1;
  d.turns.push_back(t1);
  for (SlotHead& h : m.heads) h.b3.value.data[0] = -10.0;
  auto states = track_dialogue(m, d, cfg);
  REQUIRE(states.size() == 2);
  CHECK(states[0] == states[1]);
}

TEST_CASE("ensemble vote: majority, ties, unanimity") {
  DialogueState A = state({"north"}, {"thai"});
  DialogueState B = state({"south"}, {"thai"});

  std::vector<std::vector<DialogueState>> runs{{A}, {A}, {B}, {A}};
  CHECK(ensemble_vote(runs) == std::vector<DialogueState>{A});

  // 2-2 tie goes to the state of the lowest run index
  std::vector<std::vector<DialogueState>> tie{{B}, {A}, {A}, {B}};
  CHECK(ensemble_vote(tie) == std::vector<DialogueState>{B});

  std::vector<std::vector<DialogueState>> same{{A, B}, {A, B}, {A, B}};
  CHECK(ensemble_vote(same) == std::vector<DialogueState>{A, B});

  CHECK_THROWS_AS(ensemble_vote({{A}}), std::invalid_argument);
  CHECK_THROWS_AS(ensemble_vote({{A}, {A, B}}), std::invalid_argument);
}
