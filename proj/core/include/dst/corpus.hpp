#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dst {

// Reserved gold/state literals.
inline constexpr const char* kNone = "none";
inline constexpr const char* kDontcare = "dontcare";

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Schema {
  std::vector<std::string> slots;

  bool has(const std::string& s) const;
  std::size_t index_of(const std::string& s) const;  // throws SchemaError
};

// Delexicalized system act: inform(price), request(food), hello().
// Slot values are never kept except the literal dontcare, which the
// reader folds into the slot field as "slot=dontcare".
struct DialogueAct {
  std::string act;
  std::optional<std::string> slot;

  std::string render() const;
  bool operator==(const DialogueAct&) const = default;
};

// Gold state per slot: empty set means none; {dontcare} is the
// no-preference sentinel; otherwise a set of concrete values.
using GoldState = std::map<std::string, std::set<std::string>>;

struct Turn {
  int index = 0;
  std::vector<DialogueAct> system_acts;
  std::string user_utterance;
  std::vector<std::string> user_tokens;
  std::vector<std::pair<std::string, std::string>> slu;  // (slot, value)
  GoldState gold;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;

  bool operator==(const Dialogue&) const = default;
};

struct CorpusSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> dev;
  std::vector<Dialogue> test;
};

enum class CorpusFormat { kInternalJson, kDstc2Json };

// Lowercase, strip leading/trailing punctuation per token, split on
// whitespace. Idempotent on its own output.
std::vector<std::string> normalize(const std::string& utterance);

// schema.slots empty -> inferred from the union of gold keys (sorted).
// The schema actually in effect is written back into *schema.
std::vector<Dialogue> parse_corpus(const std::string& path, CorpusFormat format,
                                   Schema* schema);

std::string to_internal_json(const std::vector<Dialogue>& dialogues);
void write_internal_json(const std::string& path,
                         const std::vector<Dialogue>& dialogues);

// Whole-dialogue partition; |dev| = floor(dev_fraction * total + 0.5).
CorpusSplit split_corpus(const std::vector<Dialogue>& dialogues,
                         double dev_fraction, std::uint64_t seed);

struct CorpusStats {
  std::size_t dialogue_count = 0;
  std::size_t turn_count = 0;
  double mean_turns = 0.0;
  // Distinct gold values per slot, excluding and including the
  // none/dontcare sentinels.
  std::map<std::string, std::size_t> distinct_values;
  std::map<std::string, std::size_t> distinct_values_with_sentinels;
};

CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues,
                         const Schema& schema);

}  // namespace dst
