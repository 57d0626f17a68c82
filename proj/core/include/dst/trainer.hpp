#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dst/candgen.hpp"
#include "dst/corpus.hpp"
#include "dst/eval.hpp"
#include "dst/model.hpp"
#include "dst/tracker.hpp"

namespace dst {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double pos_weight = 8.0;
  double dropout = 0.5;
  std::size_t max_history = 5;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  CandidateMode candidate_mode = CandidateMode::kNgram;
  int max_ngram_order = 2;
  UpdateStrategy strategy = UpdateStrategy::kOrderedOverwrite;
  double threshold = 0.5;
  double grad_clip = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::string embedding_path;  // empty -> random init

  GeneratorConfig gen() const {
    return GeneratorConfig{candidate_mode, max_ngram_order};
  }
  TrackConfig track() const {
    return TrackConfig{gen(), strategy, threshold};
  }
};

struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  long t = 0;
};

// m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2; bias-corrected step.
// State is created lazily on first call. Non-finite grads abort.
void adam_step(const std::vector<Param*>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Scales all grads so their global L2 norm is at most max_norm.
void clip_gradients(const std::vector<Param*>& params, double max_norm);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_joint = 0.0;
};

struct TrainResult {
  Model model;
  TrainConfig config;
  std::size_t best_epoch = 0;
  double best_dev_joint = 0.0;
  std::size_t pretrained_rows = 0;
  std::vector<EpochLog> log;
  std::string rng_state;
};

// Minibatch Adam on the weighted cross-entropy over all (candidate,
// slot, turn) examples; keeps the checkpoint with the best dev joint
// accuracy, early-stopping after `patience` epochs without improvement.
TrainResult train(const TrainConfig& config, const CorpusSplit& split,
                  const Schema& schema);

std::vector<TrainResult> run_ensemble(const TrainConfig& config,
                                      const CorpusSplit& split,
                                      const Schema& schema,
                                      const std::vector<std::uint64_t>& seeds);

// Mean weighted cross-entropy over one explicit batch; exposed for
// gradient checking and overfit tests. Fills param grads when
// with_grad. dropout_rng may be null (no dropout).
struct BatchExample {
  const Dialogue* dialogue = nullptr;
  std::size_t turn = 0;
  std::size_t slot_index = 0;
  Candidate candidate;
  int label = 0;
};

double batch_loss(Model& model, const std::vector<BatchExample>& batch,
                  double pos_weight, bool with_grad, double dropout_rate = 0.0,
                  std::mt19937_64* dropout_rng = nullptr);

// ---- checkpoint container -------------------------------------------------

struct Checkpoint {
  Model model;
  TrainConfig config;
  std::size_t epoch = 0;
  double dev_metric = 0.0;
  std::string rng_state;
};

void save_checkpoint(const std::string& path, const TrainResult& result);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dst
