#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dst/corpus.hpp"
#include "dst/tracker.hpp"

namespace dst {

struct MetricsReport {
  std::map<std::string, double> per_slot_accuracy;
  double joint_accuracy = 0.0;
  std::size_t turn_count = 0;
  std::map<std::string, std::string> metadata;

  bool applicable() const { return turn_count > 0; }
};

// Gold state of one turn as a DialogueState (for comparisons).
DialogueState gold_state_of(const Turn& turn, const Schema& schema);

// Aligned per-turn state sequences. A slot counts correct when the
// tracked value set equals gold exactly (sentinels compared literally).
MetricsReport goal_accuracy(const std::vector<DialogueState>& tracked,
                            const std::vector<DialogueState>& gold,
                            const Schema& schema);

// Corpus-level: tracked[i] aligns with gold[i].turns.
MetricsReport goal_accuracy_corpus(
    const std::vector<std::vector<DialogueState>>& tracked,
    const std::vector<Dialogue>& gold, const Schema& schema);

enum class ReportFormat { kTextTable, kJson };

std::string render_report(const MetricsReport& metrics, ReportFormat format);
MetricsReport parse_report_json(const std::string& text);

// ---- synthetic corpora ----------------------------------------------------

// Template-generated dialogues where every gold value is literally
// uttered (dontcare signaled by a per-slot fixed token), so a correct
// tracker can reach joint accuracy 1.0 with unigram candidates.
struct SynthSpec {
  std::size_t n_dialogues = 200;
  std::size_t n_slots = 3;
  std::size_t vocab_size = 50;
  std::size_t turns_per_dialogue = 5;
  double change_prob = 0.3;
  double multi_value_prob = 0.0;
  std::uint64_t seed = 7;
};

Schema synth_schema(const SynthSpec& spec);
std::vector<Dialogue> synth_corpus(const SynthSpec& spec);

}  // namespace dst
