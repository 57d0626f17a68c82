#include "dst/eval.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace dst {

DialogueState gold_state_of(const Turn& turn, const Schema& schema) {
  DialogueState s;
  for (const std::string& slot : schema.slots) {
    auto it = turn.gold.find(slot);
    s.values[slot] = it == turn.gold.end() ? std::set<std::string>{} : it->second;
  }
  return s;
}

MetricsReport goal_accuracy(const std::vector<DialogueState>& tracked,
                            const std::vector<DialogueState>& gold,
                            const Schema& schema) {
  if (tracked.size() != gold.size())
    throw std::invalid_argument("goal_accuracy: misaligned turn sequences (" +
                                std::to_string(tracked.size()) + " vs " +
                                std::to_string(gold.size()) + ")");
  MetricsReport rep;
  rep.turn_count = tracked.size();
  std::map<std::string, std::size_t> slot_correct;
  std::size_t joint_correct = 0;
  for (const std::string& s : schema.slots) slot_correct[s] = 0;
  for (std::size_t t = 0; t < tracked.size(); ++t) {
    bool all = true;
    for (const std::string& s : schema.slots) {
      auto ti = tracked[t].values.find(s);
      auto gi = gold[t].values.find(s);
      const std::set<std::string> empty;
      const auto& tv = ti == tracked[t].values.end() ? empty : ti->second;
      const auto& gv = gi == gold[t].values.end() ? empty : gi->second;
      if (tv == gv) {
        ++slot_correct[s];
      } else {
        all = false;
      }
    }
    if (all) ++joint_correct;
  }
  if (rep.turn_count > 0) {
    double n = static_cast<double>(rep.turn_count);
    for (const std::string& s : schema.slots)
      rep.per_slot_accuracy[s] = static_cast<double>(slot_correct[s]) / n;
    rep.joint_accuracy = static_cast<double>(joint_correct) / n;
  }
  return rep;
}

MetricsReport goal_accuracy_corpus(
    const std::vector<std::vector<DialogueState>>& tracked,
    const std::vector<Dialogue>& gold, const Schema& schema) {
  if (tracked.size() != gold.size())
    throw std::invalid_argument("goal_accuracy_corpus: dialogue count mismatch");
  std::vector<DialogueState> flat_tracked, flat_gold;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (tracked[d].size() != gold[d].turns.size())
      throw std::invalid_argument("goal_accuracy_corpus: misaligned dialogue " +
                                  gold[d].id);
    for (std::size_t t = 0; t < gold[d].turns.size(); ++t) {
      flat_tracked.push_back(tracked[d][t]);
      flat_gold.push_back(gold_state_of(gold[d].turns[t], schema));
    }
  }
  return goal_accuracy(flat_tracked, flat_gold, schema);
}

std::string render_report(const MetricsReport& m, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json j;
    j["version"] = 1;
    j["metric"] = "all-turn goal accuracy";
    j["turn_count"] = m.turn_count;
    if (m.applicable()) {
      j["per_slot_accuracy"] = json::object();
      for (const auto& [s, a] : m.per_slot_accuracy) j["per_slot_accuracy"][s] = a;
      j["joint_accuracy"] = m.joint_accuracy;
    } else {
      j["note"] = "no turns evaluated";
    }
    j["metadata"] = json::object();
    for (const auto& [k, v] : m.metadata) j["metadata"][k] = v;
    return j.dump(1);
  }
  std::ostringstream os;
  os << "# all-turn goal accuracy";
  for (const auto& [k, v] : m.metadata) os << " | " << k << "=" << v;
  os << '\n';
  if (!m.applicable()) {
    os << "no turns evaluated\n";
    return os.str();
  }
  os.setf(std::ios::fixed);
  os.precision(1);
  for (const auto& [s, a] : m.per_slot_accuracy) os << s << " goal\t";
  os << "joint goal\n";
  for (const auto& [s, a] : m.per_slot_accuracy) os << a * 100.0 << '\t';
  os << m.joint_accuracy * 100.0 << '\n';
  os << "(" << m.turn_count << " turns)\n";
  return os.str();
}

MetricsReport parse_report_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  MetricsReport m;
  m.turn_count = j.value("turn_count", 0u);
  if (j.contains("per_slot_accuracy"))
    for (auto& [k, v] : j["per_slot_accuracy"].items())
      m.per_slot_accuracy[k] = v.get<double>();
  m.joint_accuracy = j.value("joint_accuracy", 0.0);
  if (j.contains("metadata"))
    for (auto& [k, v] : j["metadata"].items())
      m.metadata[k] = v.get<std::string>();
  return m;
}

}  // namespace dst
