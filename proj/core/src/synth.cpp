#include <random>
#include <stdexcept>

#include "dst/eval.hpp"

namespace dst {

namespace {

const std::vector<std::string> kFiller = {"i", "want", "something", "please"};

std::string slot_name(std::size_t s) { return "slot" + std::to_string(s); }

std::string value_token(std::size_t s, std::size_t j) {
  return "v" + std::to_string(s) + "w" + std::to_string(j);
}

std::string dontcare_token(std::size_t s) { return "any" + std::to_string(s); }

}  // namespace

Schema synth_schema(const SynthSpec& spec) {
  Schema sch;
  for (std::size_t s = 0; s < spec.n_slots; ++s) sch.slots.push_back(slot_name(s));
  return sch;
}

std::vector<Dialogue> synth_corpus(const SynthSpec& spec) {
  if (spec.n_dialogues == 0 || spec.n_slots == 0 || spec.turns_per_dialogue == 0)
    throw std::invalid_argument("synth_corpus: sizes must be positive");
  if (spec.change_prob < 0 || spec.change_prob > 1 ||
      spec.multi_value_prob < 0 || spec.multi_value_prob > 1)
    throw std::invalid_argument("synth_corpus: probabilities must be in [0,1]");
  std::size_t per_slot = spec.vocab_size / spec.n_slots;
  if (per_slot < 2)
    throw std::invalid_argument(
        "synth_corpus: vocab too small for n_slots (need >= 2 values per slot)");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double kDontcareProb = 0.15;  // of state changes, after multi-value

  std::vector<Dialogue> out;
  for (std::size_t di = 0; di < spec.n_dialogues; ++di) {
    Dialogue d;
    d.id = "synth-" + std::to_string(di);
    GoldState gold;
    for (std::size_t s = 0; s < spec.n_slots; ++s) gold[slot_name(s)];

    for (std::size_t ti = 0; ti < spec.turns_per_dialogue; ++ti) {
      Turn t;
      t.index = static_cast<int>(ti);
      if (ti == 0) {
        t.system_acts.push_back({"welcomemsg", std::nullopt});
      } else {
        std::size_t rs = rng() % spec.n_slots;
        t.system_acts.push_back({"request", slot_name(rs)});
      }

      for (std::size_t s = 0; s < spec.n_slots; ++s) {
        bool change = ti == 0 || u(rng) < spec.change_prob;
        if (!change) continue;
        double r = u(rng);
        std::set<std::string>& g = gold[slot_name(s)];
        if (r < spec.multi_value_prob) {
          std::size_t a = rng() % per_slot;
          std::size_t b = (a + 1 + rng() % (per_slot - 1)) % per_slot;
          g = {value_token(s, a), value_token(s, b)};
        } else if (ti > 0 && r < spec.multi_value_prob + kDontcareProb) {
          g = {kDontcare};
        } else {
          g = {value_token(s, rng() % per_slot)};
        }
      }

      // Re-state the full goal every turn so each gold value sits in
      // the turn's own unigram candidate set (per-turn coverage 1.0).
      std::vector<std::string> tokens;
      tokens.push_back(kFiller[rng() % kFiller.size()]);
      tokens.push_back(kFiller[rng() % kFiller.size()]);
      for (std::size_t s = 0; s < spec.n_slots; ++s) {
        const std::set<std::string>& g = gold[slot_name(s)];
        if (g.empty()) continue;
        if (g.count(kDontcare)) {
          tokens.push_back(dontcare_token(s));
          continue;
        }
        bool first = true;
        for (const std::string& v : g) {
          if (!first) tokens.push_back("or");
          tokens.push_back(v);
          t.slu.emplace_back(slot_name(s), v);
          first = false;
        }
      }

      std::string utt;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) utt += ' ';
        utt += tokens[i];
      }
      t.user_utterance = utt;
      t.user_tokens = normalize(utt);
      t.gold = gold;
      d.turns.push_back(std::move(t));
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace dst
