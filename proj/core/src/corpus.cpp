#include "dst/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dst {

bool Schema::has(const std::string& s) const {
  return std::find(slots.begin(), slots.end(), s) != slots.end();
}

std::size_t Schema::index_of(const std::string& s) const {
  auto it = std::find(slots.begin(), slots.end(), s);
  if (it == slots.end()) throw SchemaError("unknown slot type: " + s);
  return static_cast<std::size_t>(it - slots.begin());
}

std::string DialogueAct::render() const {
  return act + "(" + (slot ? *slot : "") + ")";
}

std::vector<std::string> normalize(const std::string& utterance) {
  std::vector<std::string> out;
  std::string tok;
  auto flush = [&] {
    std::size_t b = 0, e = tok.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
    if (e > b) out.push_back(tok.substr(b, e - b));
    tok.clear();
  };
  for (char c : utterance) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

namespace {

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += ' ';
    s += toks[i];
  }
  return s;
}

std::string norm_value(const std::string& v) { return join_tokens(normalize(v)); }

std::set<std::string> gold_value_set(const json& v, const std::string& where) {
  std::set<std::string> out;
  auto add = [&](const std::string& raw) {
    std::string n = norm_value(raw);
    if (n.empty() || n == kNone) return;
    out.insert(n);
  };
  if (v.is_string()) {
    add(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_string())
        throw ParseError(where + ": gold array entries must be strings");
      add(e.get<std::string>());
    }
  } else {
    throw ParseError(where + ": gold value must be string or array");
  }
  if (out.count(kDontcare) && out.size() > 1)
    throw ParseError(where + ": dontcare cannot co-exist with concrete values");
  return out;
}

std::vector<Dialogue> parse_internal(const std::string& path, Schema* schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ParseError(path + ": invalid json: " + e.what());
  }
  if (!root.is_object() || !root.contains("dialogues") ||
      !root["dialogues"].is_array())
    throw ParseError(path + ": expected top-level object with \"dialogues\" array");

  if (schema->slots.empty()) {
    std::set<std::string> keys;
    for (const auto& d : root["dialogues"])
      for (const auto& t : d.value("turns", json::array()))
        if (t.contains("gold"))
          for (auto& [k, v] : t["gold"].items()) keys.insert(k);
    schema->slots.assign(keys.begin(), keys.end());
  }

  std::vector<Dialogue> out;
  for (const auto& dj : root["dialogues"]) {
    Dialogue d;
    if (!dj.contains("id") || !dj["id"].is_string())
      throw ParseError(path + ": dialogue without string \"id\"");
    d.id = dj["id"].get<std::string>();
    std::string where = path + ", dialogue " + d.id;
    if (!dj.contains("turns") || !dj["turns"].is_array())
      throw ParseError(where + ": missing \"turns\" array");
    for (const auto& tj : dj["turns"]) {
      Turn t;
      t.index = tj.value("index", -1);
      if (t.index != static_cast<int>(d.turns.size()))
        throw ParseError(where + ": turn indices must be contiguous from 0");
      for (const auto& aj : tj.value("system_acts", json::array())) {
        DialogueAct a;
        a.act = aj.value("act", "");
        if (a.act.empty()) throw ParseError(where + ": system act without act");
        if (aj.contains("slot") && !aj["slot"].is_null())
          a.slot = aj["slot"].get<std::string>();
        t.system_acts.push_back(std::move(a));
      }
      t.user_utterance = tj.value("user_utterance", "");
      t.user_tokens = normalize(t.user_utterance);
      for (const auto& sj : tj.value("slu", json::array()))
        t.slu.emplace_back(sj.value("slot", ""), norm_value(sj.value("value", "")));
      if (!tj.contains("gold") || !tj["gold"].is_object())
        throw SchemaError(where + ", turn " + std::to_string(t.index) +
                          ": missing gold state");
      for (const std::string& s : schema->slots) {
        if (!tj["gold"].contains(s))
          throw SchemaError(where + ", turn " + std::to_string(t.index) +
                            ": gold state missing slot " + s);
        t.gold[s] = gold_value_set(tj["gold"][s], where);
      }
      d.turns.push_back(std::move(t));
    }
    out.push_back(std::move(d));
  }
  return out;
}

// The published DSTC2 layout: per-call directories holding log.json
// (system side + SLU) and label.json (transcriptions + goal labels).
std::vector<Dialogue> parse_dstc2(const std::string& root_path, Schema* schema) {
  if (!fs::exists(root_path))
    throw ParseError("dstc2 path does not exist: " + root_path);
  std::vector<fs::path> call_dirs;
  for (const auto& ent : fs::recursive_directory_iterator(root_path)) {
    if (!ent.is_directory()) continue;
    if (fs::exists(ent.path() / "log.json") &&
        fs::exists(ent.path() / "label.json"))
      call_dirs.push_back(ent.path());
  }
  std::sort(call_dirs.begin(), call_dirs.end());
  if (call_dirs.empty())
    throw ParseError("no log.json/label.json call directories under " +
                     root_path);

  if (schema->slots.empty()) schema->slots = {"area", "food", "pricerange"};

  std::vector<Dialogue> out;
  for (const fs::path& dir : call_dirs) {
    json log, label;
    try {
      std::ifstream(dir / "log.json") >> log;
      std::ifstream(dir / "label.json") >> label;
    } catch (const json::exception& e) {
      throw ParseError(dir.string() + ": invalid json: " + e.what());
    }
    Dialogue d;
    d.id = log.value("session-id", dir.filename().string());
    const auto& log_turns = log.value("turns", json::array());
    const auto& label_turns = label.value("turns", json::array());
    if (log_turns.size() != label_turns.size())
      throw ParseError(dir.string() + ": log/label turn count mismatch");
    for (std::size_t i = 0; i < log_turns.size(); ++i) {
      const json& lt = log_turns[i];
      const json& lb = label_turns[i];
      Turn t;
      t.index = static_cast<int>(i);
      for (const auto& aj :
           lt.value("output", json::object()).value("dialog-acts", json::array())) {
        DialogueAct a;
        a.act = aj.value("act", "");
        if (a.act.empty()) continue;
        const auto& slots = aj.value("slots", json::array());
        if (slots.empty()) {
          t.system_acts.push_back(a);
          continue;
        }
        for (const auto& sv : slots) {
          if (!sv.is_array() || sv.size() != 2) continue;
          std::string s = sv[0].is_string() ? sv[0].get<std::string>() : "";
          std::string v = sv[1].is_string() ? sv[1].get<std::string>() : "";
          DialogueAct da = a;
          if (s == "slot") {
            da.slot = v;  // request(food): the requested slot is the value
          } else if (norm_value(v) == kDontcare) {
            da.slot = s + "=dontcare";
          } else {
            da.slot = s;  // delexicalized: drop the value
          }
          t.system_acts.push_back(std::move(da));
        }
      }
      t.user_utterance = lb.value("transcription", "");
      t.user_tokens = normalize(t.user_utterance);
      for (const auto& hyp : lt.value("input", json::object())
                                 .value("live", json::object())
                                 .value("slu-hyps", json::array())) {
        for (const auto& aj : hyp.value("slu-hyp", json::array())) {
          if (aj.value("act", "") != "inform") continue;
          for (const auto& sv : aj.value("slots", json::array())) {
            if (!sv.is_array() || sv.size() != 2 || !sv[0].is_string() ||
                !sv[1].is_string())
              continue;
            std::string s = sv[0].get<std::string>();
            std::string v = norm_value(sv[1].get<std::string>());
            if (s == "slot" || v.empty()) continue;
            auto pair = std::make_pair(s, v);
            if (std::find(t.slu.begin(), t.slu.end(), pair) == t.slu.end())
              t.slu.push_back(std::move(pair));
          }
        }
      }
      const json goals = lb.value("goal-labels", json::object());
      for (const std::string& s : schema->slots) {
        std::string where = dir.string() + ", turn " + std::to_string(i);
        t.gold[s] = goals.contains(s) ? gold_value_set(goals[s], where)
                                      : std::set<std::string>{};
      }
      d.turns.push_back(std::move(t));
    }
    out.push_back(std::move(d));
  }
  return out;
}

json gold_to_json(const std::set<std::string>& vals) {
  if (vals.empty()) return json(kNone);
  if (vals.size() == 1) return json(*vals.begin());
  return json(std::vector<std::string>(vals.begin(), vals.end()));
}

}  // namespace

std::vector<Dialogue> parse_corpus(const std::string& path, CorpusFormat format,
                                   Schema* schema) {
  switch (format) {
    case CorpusFormat::kInternalJson:
      return parse_internal(path, schema);
    case CorpusFormat::kDstc2Json:
      return parse_dstc2(path, schema);
  }
  throw std::invalid_argument("parse_corpus: unknown format");
}

std::string to_internal_json(const std::vector<Dialogue>& dialogues) {
  json root;
  root["dialogues"] = json::array();
  for (const Dialogue& d : dialogues) {
    json dj;
    dj["id"] = d.id;
    dj["turns"] = json::array();
    for (const Turn& t : d.turns) {
      json tj;
      tj["index"] = t.index;
      tj["system_acts"] = json::array();
      for (const DialogueAct& a : t.system_acts) {
        json aj;
        aj["act"] = a.act;
        aj["slot"] = a.slot ? json(*a.slot) : json(nullptr);
        tj["system_acts"].push_back(std::move(aj));
      }
      tj["user_utterance"] = t.user_utterance;
      tj["slu"] = json::array();
      for (const auto& [s, v] : t.slu)
        tj["slu"].push_back(json{{"slot", s}, {"value", v}});
      tj["gold"] = json::object();
      for (const auto& [s, vals] : t.gold) tj["gold"][s] = gold_to_json(vals);
      dj["turns"].push_back(std::move(tj));
    }
    root["dialogues"].push_back(std::move(dj));
  }
  return root.dump(1);
}

void write_internal_json(const std::string& path,
                         const std::vector<Dialogue>& dialogues) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write corpus file: " + path);
  out << to_internal_json(dialogues) << '\n';
}

CorpusSplit split_corpus(const std::vector<Dialogue>& dialogues,
                         double dev_fraction, std::uint64_t seed) {
  if (dev_fraction <= 0.0 || dev_fraction >= 1.0)
    throw std::invalid_argument("split_corpus: dev_fraction must be in (0,1)");
  if (dialogues.size() < 2)
    throw std::invalid_argument("split_corpus: need at least 2 dialogues");
  std::vector<std::size_t> order(dialogues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_dev = static_cast<std::size_t>(
      std::floor(dev_fraction * static_cast<double>(dialogues.size()) + 0.5));
  n_dev = std::clamp<std::size_t>(n_dev, 1, dialogues.size() - 1);
  CorpusSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_dev ? split.dev : split.train).push_back(dialogues[order[i]]);
  }
  return split;
}

CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues,
                         const Schema& schema) {
  CorpusStats st;
  std::map<std::string, std::set<std::string>> values, values_s;
  for (const std::string& s : schema.slots) {
    values[s];
    values_s[s];
  }
  for (const Dialogue& d : dialogues) {
    ++st.dialogue_count;
    st.turn_count += d.turns.size();
    for (const Turn& t : d.turns) {
      for (const auto& [s, vals] : t.gold) {
        if (vals.empty()) {
          values_s[s].insert(kNone);
          continue;
        }
        for (const std::string& v : vals) {
          values_s[s].insert(v);
          if (v != kDontcare) values[s].insert(v);
        }
      }
    }
  }
  st.mean_turns = st.dialogue_count
                      ? static_cast<double>(st.turn_count) /
                            static_cast<double>(st.dialogue_count)
                      : 0.0;
  for (const auto& [s, vs] : values) st.distinct_values[s] = vs.size();
  for (const auto& [s, vs] : values_s)
    st.distinct_values_with_sentinels[s] = vs.size();
  return st;
}

}  // namespace dst
