#pragma once

#include <string>
#include <vector>

#include "dst/autodiff.hpp"
#include "dst/candgen.hpp"
#include "dst/model.hpp"

namespace dst {

struct LstmVars {
  Var wx, wh, b;
  std::size_t hidden = 0;
};

// Per-tape leaf bindings for every model parameter.
struct ModelVars {
  Var word_table;
  Var act_table;
  LstmVars sent_lstm;
  LstmVars dial_lstm;
  LstmVars act_lstm;
  std::vector<Var> state_emb;
  struct HeadVars {
    Var w1, b1, w2, b2, w3, b3;
  };
  std::vector<HeadVars> heads;
};

ModelVars bind_model(Tape& tape, Model& model);

// Final hidden state of an LSTM over the input vectors; empty -> zero.
Var run_lstm(Tape& tape, const LstmVars& lstm, const std::vector<Var>& inputs);

Var encode_sentence(Tape& tape, const ModelVars& mv, const Model& model,
                    const std::vector<std::string>& tokens);

// past holds previous user utterances oldest first; only the most
// recent dims.max_history are consumed.
Var encode_dialogue_history(Tape& tape, const ModelVars& mv, const Model& model,
                            const std::vector<std::vector<std::string>>& past);

Var encode_system_acts(Tape& tape, const ModelVars& mv, const Model& model,
                       const std::vector<DialogueAct>& acts);

Var encode_prev_state(Tape& tape, const ModelVars& mv, SlotStatus status,
                      std::size_t slot_index);

Var encode_candidate(Tape& tape, const ModelVars& mv, const Model& model,
                     const Candidate& candidate);

// The slot-independent part of the context, built once per turn.
struct TurnContextVars {
  Var e_s, e_d, e_a;
};

TurnContextVars encode_turn(Tape& tape, const ModelVars& mv, const Model& model,
                            const std::vector<std::string>& tokens,
                            const std::vector<std::vector<std::string>>& past,
                            const std::vector<DialogueAct>& acts);

// [e_s; e_d; e_a; e_prev], dim context_dim().
Var build_context(Tape& tape, const ModelVars& mv, const TurnContextVars& tc,
                  Var e_prev);

// Candidate rows [k, head_input_dim] -> logits [k, 1].
Var head_forward(Tape& tape, const ModelVars::HeadVars& head, Var input_rows,
                 double dropout_rate, std::mt19937_64* dropout_rng);

// FastText-style .vec text file: optional "<count> <dim>" header, then
// "word v1 .. v_dim" per line. Returns how many vocab rows were set.
std::size_t load_pretrained(EmbeddingTable& table, const std::string& path);

}  // namespace dst
