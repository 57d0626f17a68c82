#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dst/candgen.hpp"
#include "dst/corpus.hpp"
#include "dst/model.hpp"

namespace dst {

// Slot -> set of values. Empty set means none; {dontcare} means the
// user expressed no preference. dontcare never co-exists with
// concrete values.
struct DialogueState {
  std::map<std::string, std::set<std::string>> values;

  static DialogueState all_none(const Schema& schema);
  SlotStatus status(const std::string& slot) const;
  // Canonical serialization of the full slot tuple, used for joint
  // comparison and majority voting.
  std::string joint_key() const;

  bool operator==(const DialogueState&) const = default;
};

struct Prediction {
  Candidate candidate;
  std::string slot;
  double score = 0.0;
  bool positive = false;
};

enum class UpdateStrategy { kOrderedOverwrite, kArgmaxSingle, kMultiValue };

struct TrackConfig {
  GeneratorConfig gen;
  UpdateStrategy strategy = UpdateStrategy::kOrderedOverwrite;
  double threshold = 0.5;
};

// Probability for one candidate in one turn context. Dropout is active
// only in train mode (rng must then be provided).
double score_candidate(Model& model, const Candidate& candidate,
                       const Turn& turn,
                       const std::vector<std::vector<std::string>>& history,
                       const DialogueState& prev, const std::string& slot,
                       bool train_mode = false,
                       std::mt19937_64* dropout_rng = nullptr,
                       double dropout_rate = 0.5);

// Slots with no positive prediction carry over their previous value.
DialogueState update_state(const DialogueState& prev,
                           const std::vector<Prediction>& predictions,
                           UpdateStrategy strategy);

// One state per user turn; starts from all-none.
std::vector<DialogueState> track_dialogue(Model& model, const Dialogue& dialogue,
                                          const TrackConfig& config);

// Per-turn majority vote over aligned joint-state sequences; ties go
// to the lowest run index among the tied states.
std::vector<DialogueState> ensemble_vote(
    const std::vector<std::vector<DialogueState>>& run_states);

}  // namespace dst
