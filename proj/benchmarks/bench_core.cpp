#include <benchmark/benchmark.h>

#include <random>

#include "dst/encoder.hpp"
#include "dst/eval.hpp"
#include "dst/trainer.hpp"

namespace {

using namespace dst;

std::vector<Dialogue> bench_corpus() {
  SynthSpec spec;
  spec.n_dialogues = 8;
  spec.seed = 1;
  return synth_corpus(spec);
}

Schema bench_schema() {
  SynthSpec spec;
  return synth_schema(spec);
}

Model bench_model() {
  auto corpus = bench_corpus();
  Model m = Model::build(bench_schema(), collect_word_vocab(corpus),
                         collect_act_vocab(corpus), ModelDims{});
  std::mt19937_64 rng(1);
  m.init_params(rng);
  return m;
}

void BM_NgramCandidates(benchmark::State& state) {
  std::vector<std::string> toks;
  for (int i = 0; i < 12; ++i) toks.push_back("tok" + std::to_string(i));
  for (auto _ : state)
    benchmark::DoNotOptimize(ngram_candidates(toks, 2));
}
BENCHMARK(BM_NgramCandidates);

void BM_SentenceEncode(benchmark::State& state) {
  Model m = bench_model();
  std::vector<std::string> toks(10, "v0w0");
  for (auto _ : state) {
    Tape tape;
    ModelVars mv = bind_model(tape, m);
    benchmark::DoNotOptimize(encode_sentence(tape, mv, m, toks).val().data[0]);
  }
}
BENCHMARK(BM_SentenceEncode);

void BM_TrackDialogue(benchmark::State& state) {
  Model m = bench_model();
  Dialogue d = bench_corpus()[0];
  TrackConfig cfg{{CandidateMode::kNgram, 2},
                  UpdateStrategy::kOrderedOverwrite, 0.5};
  for (auto _ : state)
    benchmark::DoNotOptimize(track_dialogue(m, d, cfg));
}
BENCHMARK(BM_TrackDialogue);

void BM_BatchLossBackward(benchmark::State& state) {
  Model m = bench_model();
  auto corpus = bench_corpus();
  Schema schema = bench_schema();
  std::vector<BatchExample> batch;
  const Dialogue& d = corpus[0];
  for (std::size_t si = 0; si < schema.slots.size(); ++si)
    for (const LabeledExample& ex : label_candidates(
             candidates_for(d.turns[0], schema.slots[si], {CandidateMode::kNgram, 2}),
             d.turns[0], schema.slots[si], d.id))
      batch.push_back(BatchExample{&d, 0, si, ex.candidate, ex.label});
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_loss(m, batch, 8.0, true));
}
BENCHMARK(BM_BatchLossBackward);

}  // namespace

BENCHMARK_MAIN();
