#include "dst/candgen.hpp"

#include <set>
#include <stdexcept>

namespace dst {

std::vector<Candidate> ngram_candidates(const std::vector<std::string>& tokens,
                                        int max_order) {
  if (max_order < 1 || max_order > 2)
    throw std::invalid_argument("ngram_candidates: max_order must be 1 or 2");
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (int order = 1; order <= max_order; ++order) {
    if (tokens.size() < static_cast<std::size_t>(order)) continue;
    for (std::size_t pos = 0; pos + order <= tokens.size(); ++pos) {
      std::string text = tokens[pos];
      for (int k = 1; k < order; ++k) text += ' ' + tokens[pos + k];
      if (!seen.insert(text).second) continue;  // dedup keeps first position
      out.push_back(Candidate{text, CandidateSource::kNgram,
                              static_cast<int>(pos)});
    }
  }
  if (!seen.count(kDontcare))
    out.push_back(Candidate{kDontcare, CandidateSource::kDontcare, -1});
  return out;
}

std::vector<Candidate> slu_candidates(const Turn& turn, const std::string& slot) {
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const auto& [s, v] : turn.slu) {
    if (s != slot || v.empty() || v == kDontcare) continue;
    if (!seen.insert(v).second) continue;
    out.push_back(Candidate{v, CandidateSource::kSlu, -1});
  }
  out.push_back(Candidate{kDontcare, CandidateSource::kDontcare, -1});
  return out;
}

std::vector<Candidate> candidates_for(const Turn& turn, const std::string& slot,
                                      const GeneratorConfig& config) {
  switch (config.mode) {
    case CandidateMode::kNgram:
      return ngram_candidates(turn.user_tokens, config.max_order);
    case CandidateMode::kSlu:
      return slu_candidates(turn, slot);
  }
  throw std::invalid_argument("candidates_for: unknown mode");
}

std::vector<LabeledExample> label_candidates(
    const std::vector<Candidate>& candidates, const Turn& turn,
    const std::string& slot, const std::string& dialogue_id) {
  auto it = turn.gold.find(slot);
  if (it == turn.gold.end())
    throw SchemaError("label_candidates: turn has no gold entry for slot " + slot);
  const std::set<std::string>& gold = it->second;  // empty == none
  std::vector<LabeledExample> out;
  out.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    LabeledExample ex;
    ex.candidate = c;
    ex.slot = slot;
    ex.label = gold.count(c.text) ? 1 : 0;
    ex.dialogue_id = dialogue_id;
    ex.turn_index = turn.index;
    out.push_back(std::move(ex));
  }
  return out;
}

CoverageReport coverage_report(const std::vector<Dialogue>& corpus,
                               const GeneratorConfig& config,
                               const Schema& schema) {
  CoverageReport rep;
  for (const Dialogue& d : corpus) {
    for (const Turn& t : d.turns) {
      for (const std::string& slot : schema.slots) {
        auto it = t.gold.find(slot);
        if (it == t.gold.end() || it->second.empty()) continue;
        std::vector<Candidate> cands = candidates_for(t, slot, config);
        for (const std::string& v : it->second) {
          ++rep.total;
          for (const Candidate& c : cands) {
            if (c.text == v) {
              ++rep.covered;
              break;
            }
          }
        }
      }
    }
  }
  rep.applicable = rep.total > 0;
  rep.coverage = rep.applicable ? static_cast<double>(rep.covered) /
                                      static_cast<double>(rep.total)
                                : 0.0;
  return rep;
}

}  // namespace dst
