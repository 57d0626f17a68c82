#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "dst/autodiff.hpp"
#include "dst/corpus.hpp"

namespace dst {

struct ModelDims {
  std::size_t word_dim = 300;
  std::size_t sent_hidden = 128;
  std::size_t dial_hidden = 256;
  std::size_t act_emb_dim = 50;
  std::size_t act_hidden = 64;
  std::size_t state_emb_dim = 16;
  std::size_t fc1 = 256;
  std::size_t fc2 = 16;
  std::size_t max_history = 5;

  std::size_t context_dim() const {
    return sent_hidden + dial_hidden + act_hidden + state_emb_dim;
  }
  std::size_t head_input_dim() const { return word_dim + context_dim(); }
};

// Token -> row lookup with a dedicated trainable OOV row and, for the
// word table, a trainable row for the dontcare candidate.
struct EmbeddingTable {
  std::map<std::string, std::size_t> vocab;
  Param matrix;
  std::size_t oov_row = 0;
  std::size_t dontcare_row = 0;  // == oov_row when absent
  std::size_t dim = 0;

  std::size_t index_of(const std::string& token) const {
    auto it = vocab.find(token);
    return it == vocab.end() ? oov_row : it->second;
  }
};

struct LstmParams {
  Param wx;  // [4h, in], gate order i,f,g,o
  Param wh;  // [4h, h]
  Param b;   // [4h]
  std::size_t input = 0;
  std::size_t hidden = 0;
};

struct SlotHead {
  Param w1, b1;  // head_input -> fc1
  Param w2, b2;  // fc1 -> fc2
  Param w3, b3;  // fc2 -> 1
};

// Previous-state status classes for the per-slot state embedding lookup.
enum class SlotStatus : std::size_t { kNone = 0, kDontcare = 1, kFilled = 2 };
inline constexpr std::size_t kNumSlotStatuses = 3;

struct Model {
  ModelDims dims;
  Schema schema;
  EmbeddingTable words;
  EmbeddingTable acts;
  LstmParams sent_lstm;
  LstmParams dial_lstm;
  LstmParams act_lstm;
  std::vector<Param> state_emb;  // per slot, [3, state_emb_dim]
  std::vector<SlotHead> heads;   // per slot

  static Model build(const Schema& schema,
                     const std::vector<std::string>& word_vocab,
                     const std::vector<std::string>& act_vocab,
                     const ModelDims& dims = {});

  // Uniform [-0.08, 0.08] weights and embeddings, zero biases, LSTM
  // forget-gate bias +1. Draw order is the parameters() order.
  void init_params(std::mt19937_64& rng);

  std::vector<Param*> parameters();  // stable order
  void zero_grads();
};

std::vector<std::string> collect_word_vocab(const std::vector<Dialogue>& corpus);
std::vector<std::string> collect_act_vocab(const std::vector<Dialogue>& corpus);

}  // namespace dst
