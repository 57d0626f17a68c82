#include "dst/encoder.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dst {

namespace {

LstmVars bind_lstm(Tape& tape, LstmParams& l) {
  return LstmVars{tape.leaf(l.wx), tape.leaf(l.wh), tape.leaf(l.b), l.hidden};
}

Var table_row(Tape& tape, Var table, std::size_t row) {
  (void)tape;
  return mean_rows(gather_rows(table, {row}));
}

}  // namespace

ModelVars bind_model(Tape& tape, Model& model) {
  ModelVars mv;
  mv.word_table = tape.leaf(model.words.matrix);
  mv.act_table = tape.leaf(model.acts.matrix);
  mv.sent_lstm = bind_lstm(tape, model.sent_lstm);
  mv.dial_lstm = bind_lstm(tape, model.dial_lstm);
  mv.act_lstm = bind_lstm(tape, model.act_lstm);
  for (Param& p : model.state_emb) mv.state_emb.push_back(tape.leaf(p));
  for (SlotHead& h : model.heads) {
    mv.heads.push_back(ModelVars::HeadVars{tape.leaf(h.w1), tape.leaf(h.b1),
                                           tape.leaf(h.w2), tape.leaf(h.b2),
                                           tape.leaf(h.w3), tape.leaf(h.b3)});
  }
  return mv;
}

Var run_lstm(Tape& tape, const LstmVars& lstm, const std::vector<Var>& inputs) {
  std::size_t h = lstm.hidden;
  if (inputs.empty())
    return tape.constant(Array::zeros({h}));
  Var hs = tape.constant(Array::zeros({h}));
  Var cs = tape.constant(Array::zeros({h}));
  for (Var x : inputs) {
    Var gates = add(add(matmul(lstm.wx, x), matmul(lstm.wh, hs)), lstm.b);
    Var i = sigmoid(slice(gates, 0, h));
    Var f = sigmoid(slice(gates, h, 2 * h));
    Var g = tanh_op(slice(gates, 2 * h, 3 * h));
    Var o = sigmoid(slice(gates, 3 * h, 4 * h));
    cs = add(mul(f, cs), mul(i, g));
    hs = mul(o, tanh_op(cs));
  }
  return hs;
}

Var encode_sentence(Tape& tape, const ModelVars& mv, const Model& model,
                    const std::vector<std::string>& tokens) {
  std::vector<Var> xs;
  xs.reserve(tokens.size());
  for (const std::string& tok : tokens)
    xs.push_back(table_row(tape, mv.word_table, model.words.index_of(tok)));
  return run_lstm(tape, mv.sent_lstm, xs);
}

Var encode_dialogue_history(Tape& tape, const ModelVars& mv, const Model& model,
                            const std::vector<std::vector<std::string>>& past) {
  std::size_t start =
      past.size() > model.dims.max_history ? past.size() - model.dims.max_history
                                           : 0;
  std::vector<Var> sent_encodings;
  for (std::size_t i = start; i < past.size(); ++i)
    sent_encodings.push_back(encode_sentence(tape, mv, model, past[i]));
  return run_lstm(tape, mv.dial_lstm, sent_encodings);
}

Var encode_system_acts(Tape& tape, const ModelVars& mv, const Model& model,
                       const std::vector<DialogueAct>& acts) {
  std::vector<Var> xs;
  xs.reserve(acts.size());
  for (const DialogueAct& a : acts)
    xs.push_back(table_row(tape, mv.act_table, model.acts.index_of(a.render())));
  return run_lstm(tape, mv.act_lstm, xs);
}

Var encode_prev_state(Tape& tape, const ModelVars& mv, SlotStatus status,
                      std::size_t slot_index) {
  return table_row(tape, mv.state_emb.at(slot_index),
                   static_cast<std::size_t>(status));
}

Var encode_candidate(Tape& tape, const ModelVars& mv, const Model& model,
                     const Candidate& candidate) {
  if (candidate.source == CandidateSource::kDontcare ||
      candidate.text == kDontcare)
    return table_row(tape, mv.word_table, model.words.dontcare_row);
  std::vector<std::size_t> idx;
  for (const std::string& tok : normalize(candidate.text))
    idx.push_back(model.words.index_of(tok));
  if (idx.empty())
    throw std::invalid_argument("encode_candidate: empty candidate text");
  return mean_rows(gather_rows(mv.word_table, idx));
}

TurnContextVars encode_turn(Tape& tape, const ModelVars& mv, const Model& model,
                            const std::vector<std::string>& tokens,
                            const std::vector<std::vector<std::string>>& past,
                            const std::vector<DialogueAct>& acts) {
  return TurnContextVars{encode_sentence(tape, mv, model, tokens),
                         encode_dialogue_history(tape, mv, model, past),
                         encode_system_acts(tape, mv, model, acts)};
}

Var build_context(Tape& tape, const ModelVars& mv, const TurnContextVars& tc,
                  Var e_prev) {
  (void)tape;
  (void)mv;
  return concat({tc.e_s, tc.e_d, tc.e_a, e_prev});
}

Var head_forward(Tape& tape, const ModelVars::HeadVars& head, Var input_rows,
                 double dropout_rate, std::mt19937_64* dropout_rng) {
  (void)tape;
  Var h1 = relu(add(matmul(input_rows, head.w1), head.b1));
  if (dropout_rng != nullptr)
    h1 = dropout(h1, dropout_rate, *dropout_rng, true);
  Var h2 = relu(add(matmul(h1, head.w2), head.b2));
  return add(matmul(h2, head.w3), head.b3);
}

std::size_t load_pretrained(EmbeddingTable& table, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file: " + path);
  std::size_t count = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (first) {
      first = false;
      // optional "<count> <dim>" header
      if (vals.size() == 1) {
        char* end = nullptr;
        std::strtoul(word.c_str(), &end, 10);
        if (end && *end == '\0') continue;
      }
    }
    if (vals.size() != table.dim)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(table.dim) +
                       " values, got " + std::to_string(vals.size()));
    auto it = table.vocab.find(word);
    if (it == table.vocab.end()) continue;
    double* row = table.matrix.value.data.data() + it->second * table.dim;
    for (std::size_t i = 0; i < table.dim; ++i) row[i] = vals[i];
    ++count;
  }
  return count;
}

}  // namespace dst
