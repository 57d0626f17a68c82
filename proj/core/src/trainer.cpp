#include "dst/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dst/encoder.hpp"

namespace dst {

void clip_gradients(const std::vector<Param*>& params, double max_norm) {
  double sq = 0.0;
  for (Param* p : params)
    for (double g : p->grad.data) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  double s = max_norm / norm;
  for (Param* p : params)
    for (double& g : p->grad.data) g *= s;
}

void adam_step(const std::vector<Param*>& params, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (state.m.empty()) {
    for (Param* p : params) {
      state.m.push_back(Array::zeros(p->value.shape));
      state.v.push_back(Array::zeros(p->value.shape));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state/param count mismatch");
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    if (!p->grad.all_finite())
      throw NumericError("adam_step: non-finite gradient in " + p->name);
    Array& m = state.m[pi];
    Array& v = state.v[pi];
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      double g = p->grad.data[i];
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

std::vector<std::vector<std::string>> history_of(const Dialogue& d,
                                                 std::size_t turn) {
  std::vector<std::vector<std::string>> h;
  for (std::size_t i = 0; i < turn; ++i) h.push_back(d.turns[i].user_tokens);
  return h;
}

DialogueState teacher_prev_state(const Dialogue& d, std::size_t turn,
                                 const Schema& schema) {
  if (turn == 0) return DialogueState::all_none(schema);
  return gold_state_of(d.turns[turn - 1], schema);
}

}  // namespace

double batch_loss(Model& model, const std::vector<BatchExample>& batch,
                  double pos_weight, bool with_grad, double dropout_rate,
                  std::mt19937_64* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  if (with_grad) model.zero_grads();

  Tape tape;
  ModelVars mv = bind_model(tape, model);
  std::vector<Var> partial_sums;

  std::size_t i = 0;
  while (i < batch.size()) {
    const Dialogue* d = batch[i].dialogue;
    std::size_t turn = batch[i].turn;
    std::size_t j = i;
    while (j < batch.size() && batch[j].dialogue == d && batch[j].turn == turn)
      ++j;

    const Turn& t = d->turns[turn];
    TurnContextVars tc = encode_turn(tape, mv, model, t.user_tokens,
                                     history_of(*d, turn), t.system_acts);
    DialogueState prev = teacher_prev_state(*d, turn, model.schema);

    std::size_t k = i;
    while (k < j) {
      std::size_t si = batch[k].slot_index;
      std::size_t e = k;
      while (e < j && batch[e].slot_index == si) ++e;

      Var e_prev =
          encode_prev_state(tape, mv, prev.status(model.schema.slots[si]), si);
      Var ctx = build_context(tape, mv, tc, e_prev);
      std::vector<Var> rows;
      std::vector<double> labels;
      for (std::size_t x = k; x < e; ++x) {
        rows.push_back(
            concat({encode_candidate(tape, mv, model, batch[x].candidate), ctx}));
        labels.push_back(static_cast<double>(batch[x].label));
      }
      Var logits = head_forward(tape, mv.heads[si], stack_rows(rows),
                                dropout_rate, dropout_rng);
      partial_sums.push_back(weighted_bce_sum(logits, labels, pos_weight));
      k = e;
    }
    i = j;
  }

  Var loss = scale(add_n(partial_sums), 1.0 / static_cast<double>(batch.size()));
  if (with_grad) tape.backward(loss);
  return loss.val().data[0];
}

namespace {

struct TurnExamples {
  const Dialogue* dialogue = nullptr;
  std::size_t turn = 0;
  // Flattened (slot, candidate, label) in slot order.
  std::vector<BatchExample> units;
};

std::vector<TurnExamples> build_examples(const std::vector<Dialogue>& train,
                                         const Schema& schema,
                                         const GeneratorConfig& gen,
                                         std::size_t* positives) {
  std::vector<TurnExamples> out;
  for (const Dialogue& d : train) {
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      TurnExamples te;
      te.dialogue = &d;
      te.turn = ti;
      for (std::size_t si = 0; si < schema.slots.size(); ++si) {
        const std::string& slot = schema.slots[si];
        auto cands = candidates_for(d.turns[ti], slot, gen);
        for (const LabeledExample& ex :
             label_candidates(cands, d.turns[ti], slot, d.id)) {
          te.units.push_back(
              BatchExample{&d, ti, si, ex.candidate, ex.label});
          if (ex.label == 1) ++*positives;
        }
      }
      out.push_back(std::move(te));
    }
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const CorpusSplit& split,
                  const Schema& schema) {
  if (split.train.empty() || split.dev.empty())
    throw std::invalid_argument("train: train and dev must be non-empty");

  std::mt19937_64 rng(config.seed);

  std::vector<Dialogue> vocab_source = split.train;
  vocab_source.insert(vocab_source.end(), split.dev.begin(), split.dev.end());
  ModelDims dims;
  dims.max_history = config.max_history;
  Model model = Model::build(schema, collect_word_vocab(vocab_source),
                             collect_act_vocab(vocab_source), dims);
  model.init_params(rng);

  TrainResult result;
  if (!config.embedding_path.empty())
    result.pretrained_rows = load_pretrained(model.words, config.embedding_path);

  std::size_t positives = 0;
  std::vector<TurnExamples> turns =
      build_examples(split.train, schema, config.gen(), &positives);
  if (positives == 0)
    throw std::runtime_error(
        "train: no positive examples in training data (degenerate labeling)");

  std::vector<Param*> params = model.parameters();
  AdamState adam;
  TrackConfig track_cfg = config.track();

  std::vector<Array> best_values;
  double best_dev = -1.0;
  std::size_t best_epoch = 0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(turns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t example_count = 0;
    std::vector<BatchExample> batch;
    auto flush = [&] {
      if (batch.empty()) return;
      double loss = batch_loss(model, batch, config.pos_weight, true,
                               config.dropout, &rng);
      clip_gradients(params, config.grad_clip);
      adam_step(params, adam, config.learning_rate, config.beta1, config.beta2,
                config.adam_eps);
      loss_sum += loss * static_cast<double>(batch.size());
      example_count += batch.size();
      batch.clear();
    };
    for (std::size_t oi : order) {
      for (const BatchExample& u : turns[oi].units) {
        batch.push_back(u);
        if (batch.size() == config.batch_size) flush();
      }
    }
    flush();

    std::vector<std::vector<DialogueState>> dev_states;
    for (const Dialogue& d : split.dev)
      dev_states.push_back(track_dialogue(model, d, track_cfg));
    MetricsReport dev = goal_accuracy_corpus(dev_states, split.dev, schema);

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(example_count);
    log.dev_joint = dev.joint_accuracy;
    result.log.push_back(log);

    if (dev.joint_accuracy > best_dev) {
      best_dev = dev.joint_accuracy;
      best_epoch = epoch;
      stale = 0;
      best_values.clear();
      for (Param* p : params) best_values.push_back(p->value);
    } else {
      ++stale;
    }
    if (stale >= config.patience) break;
    if (best_dev >= 1.0) break;  // dev solved, selection cannot improve
  }

  for (std::size_t i = 0; i < params.size(); ++i)
    params[i]->value = best_values[i];

  result.model = std::move(model);
  result.config = config;
  result.best_epoch = best_epoch;
  result.best_dev_joint = best_dev;
  std::ostringstream rs;
  rs << rng;
  result.rng_state = rs.str();
  return result;
}

std::vector<TrainResult> run_ensemble(const TrainConfig& config,
                                      const CorpusSplit& split,
                                      const Schema& schema,
                                      const std::vector<std::uint64_t>& seeds) {
  std::vector<TrainResult> out;
  for (std::uint64_t s : seeds) {
    TrainConfig c = config;
    c.seed = s;
    out.push_back(train(c, split, schema));
  }
  return out;
}

}  // namespace dst
