#include "dst/tracker.hpp"

#include <algorithm>
#include <stdexcept>

#include "dst/encoder.hpp"

namespace dst {

DialogueState DialogueState::all_none(const Schema& schema) {
  DialogueState s;
  for (const std::string& slot : schema.slots) s.values[slot];
  return s;
}

SlotStatus DialogueState::status(const std::string& slot) const {
  auto it = values.find(slot);
  if (it == values.end() || it->second.empty()) return SlotStatus::kNone;
  if (it->second.size() == 1 && *it->second.begin() == kDontcare)
    return SlotStatus::kDontcare;
  return SlotStatus::kFilled;
}

std::string DialogueState::joint_key() const {
  std::string key;
  for (const auto& [slot, vals] : values) {
    key += slot;
    key += '=';
    if (vals.empty()) {
      key += kNone;
    } else {
      bool first = true;
      for (const std::string& v : vals) {
        if (!first) key += '|';
        first = false;
        key += v;
      }
    }
    key += ';';
  }
  return key;
}

double score_candidate(Model& model, const Candidate& candidate,
                       const Turn& turn,
                       const std::vector<std::vector<std::string>>& history,
                       const DialogueState& prev, const std::string& slot,
                       bool train_mode, std::mt19937_64* dropout_rng,
                       double dropout_rate) {
  std::size_t si = model.schema.index_of(slot);
  Tape tape;
  ModelVars mv = bind_model(tape, model);
  TurnContextVars tc =
      encode_turn(tape, mv, model, turn.user_tokens, history, turn.system_acts);
  Var e_prev = encode_prev_state(tape, mv, prev.status(slot), si);
  Var d = build_context(tape, mv, tc, e_prev);
  Var cand = encode_candidate(tape, mv, model, candidate);
  Var input = stack_rows({concat({cand, d})});
  Var logits = head_forward(tape, mv.heads[si], input, dropout_rate,
                            train_mode ? dropout_rng : nullptr);
  return 1.0 / (1.0 + std::exp(-logits.val().data[0]));
}

namespace {

void apply_write(std::set<std::string>& slot_values, const std::string& text) {
  if (text == kDontcare) {
    slot_values = {kDontcare};
  } else {
    slot_values = {text};
  }
}

}  // namespace

DialogueState update_state(const DialogueState& prev,
                           const std::vector<Prediction>& predictions,
                           UpdateStrategy strategy) {
  DialogueState next = prev;
  std::map<std::string, std::vector<const Prediction*>> positives;
  for (const Prediction& p : predictions)
    if (p.positive) positives[p.slot].push_back(&p);

  for (auto& [slot, preds] : positives) {
    std::set<std::string>& vals = next.values[slot];
    switch (strategy) {
      case UpdateStrategy::kOrderedOverwrite: {
        std::stable_sort(preds.begin(), preds.end(),
                         [](const Prediction* a, const Prediction* b) {
                           return a->candidate.position < b->candidate.position;
                         });
        for (const Prediction* p : preds) apply_write(vals, p->candidate.text);
        break;
      }
      case UpdateStrategy::kArgmaxSingle: {
        const Prediction* best = preds[0];
        for (const Prediction* p : preds) {
          if (p->score > best->score ||
              (p->score == best->score &&
               p->candidate.position < best->candidate.position))
            best = p;
        }
        apply_write(vals, best->candidate.text);
        break;
      }
      case UpdateStrategy::kMultiValue: {
        std::set<std::string> next_vals;
        bool saw_dontcare = false;
        for (const Prediction* p : preds) {
          if (p->candidate.text == kDontcare) {
            saw_dontcare = true;
          } else {
            next_vals.insert(p->candidate.text);
          }
        }
        // dontcare never co-exists with concrete values
        vals = next_vals.empty() && saw_dontcare
                   ? std::set<std::string>{kDontcare}
                   : next_vals;
        break;
      }
    }
  }
  return next;
}

std::vector<DialogueState> track_dialogue(Model& model, const Dialogue& dialogue,
                                          const TrackConfig& config) {
  std::vector<DialogueState> out;
  DialogueState state = DialogueState::all_none(model.schema);
  std::vector<std::vector<std::string>> history;

  Tape tape;
  ModelVars mv = bind_model(tape, model);

  for (const Turn& turn : dialogue.turns) {
    TurnContextVars tc = encode_turn(tape, mv, model, turn.user_tokens, history,
                                     turn.system_acts);
    std::vector<Prediction> preds;
    for (std::size_t si = 0; si < model.schema.slots.size(); ++si) {
      const std::string& slot = model.schema.slots[si];
      std::vector<Candidate> cands = candidates_for(turn, slot, config.gen);
      Var e_prev = encode_prev_state(tape, mv, state.status(slot), si);
      Var d = build_context(tape, mv, tc, e_prev);
      std::vector<Var> rows;
      rows.reserve(cands.size());
      for (const Candidate& c : cands)
        rows.push_back(concat({encode_candidate(tape, mv, model, c), d}));
      Var logits = head_forward(tape, mv.heads[si], stack_rows(rows), 0.0, nullptr);
      const Array& lv = logits.val();
      for (std::size_t k = 0; k < cands.size(); ++k) {
        Prediction p;
        p.candidate = cands[k];
        p.slot = slot;
        p.score = 1.0 / (1.0 + std::exp(-lv.data[k]));
        p.positive = p.score >= config.threshold;
        preds.push_back(std::move(p));
      }
    }
    state = update_state(state, preds, config.strategy);
    out.push_back(state);
    history.push_back(turn.user_tokens);
  }
  return out;
}

std::vector<DialogueState> ensemble_vote(
    const std::vector<std::vector<DialogueState>>& run_states) {
  if (run_states.size() < 2)
    throw std::invalid_argument("ensemble_vote: need at least 2 runs");
  std::size_t turns = run_states[0].size();
  for (const auto& run : run_states)
    if (run.size() != turns)
      throw std::invalid_argument("ensemble_vote: mismatched turn counts");

  std::vector<DialogueState> out;
  out.reserve(turns);
  for (std::size_t t = 0; t < turns; ++t) {
    std::map<std::string, std::size_t> votes;  // joint key -> count
    for (const auto& run : run_states) ++votes[run[t].joint_key()];
    std::size_t best_votes = 0;
    std::size_t best_run = 0;
    for (std::size_t r = 0; r < run_states.size(); ++r) {
      std::size_t v = votes[run_states[r][t].joint_key()];
      if (v > best_votes) {  // first (lowest-index) run wins ties
        best_votes = v;
        best_run = r;
      }
    }
    out.push_back(run_states[best_run][t]);
  }
  return out;
}

}  // namespace dst
