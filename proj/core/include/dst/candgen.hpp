#pragma once

#include <string>
#include <vector>

#include "dst/corpus.hpp"

namespace dst {

enum class CandidateSource { kNgram, kSlu, kDontcare };

struct Candidate {
  std::string text;           // normalized; 1..max_order tokens or "dontcare"
  CandidateSource source = CandidateSource::kNgram;
  int position = -1;          // token offset; >= 0 iff source == kNgram

  bool operator==(const Candidate&) const = default;
};

struct LabeledExample {
  Candidate candidate;
  std::string slot;
  int label = 0;  // 1 iff candidate text is a gold value for slot this turn
  std::string dialogue_id;
  int turn_index = 0;
};

enum class CandidateMode { kNgram, kSlu };

struct GeneratorConfig {
  CandidateMode mode = CandidateMode::kNgram;
  int max_order = 2;  // 1 or 2
};

// All contiguous n-grams of order 1..max_order in sentence order
// (unigrams first), deduplicated keeping the first position, then one
// dontcare candidate appended last.
std::vector<Candidate> ngram_candidates(const std::vector<std::string>& tokens,
                                        int max_order);

// Distinct SLU-hypothesized values for the slot, plus dontcare.
std::vector<Candidate> slu_candidates(const Turn& turn, const std::string& slot);

std::vector<Candidate> candidates_for(const Turn& turn, const std::string& slot,
                                      const GeneratorConfig& config);

std::vector<LabeledExample> label_candidates(
    const std::vector<Candidate>& candidates, const Turn& turn,
    const std::string& slot, const std::string& dialogue_id = "");

// Fraction of gold values (!= none) across (turn, slot) pairs that the
// generator's candidate set contains. Bounds achievable goal accuracy.
struct CoverageReport {
  std::size_t total = 0;
  std::size_t covered = 0;
  bool applicable = false;
  double coverage = 0.0;
};

CoverageReport coverage_report(const std::vector<Dialogue>& corpus,
                               const GeneratorConfig& config,
                               const Schema& schema);

}  // namespace dst
