// Command-line front end: ingest corpora, train trackers, evaluate
// checkpoints, vote ensembles, and generate synthetic dialogues.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error, 3 numeric
// failure during training.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dst/eval.hpp"
#include "dst/trainer.hpp"

namespace {

using namespace dst;

CandidateMode mode_from(const std::string& s) {
  if (s == "ngram") return CandidateMode::kNgram;
  if (s == "slu") return CandidateMode::kSlu;
  throw CLI::ValidationError("--candidates", "must be ngram or slu");
}

std::string mode_str(CandidateMode m) {
  return m == CandidateMode::kNgram ? "ngram" : "slu";
}

UpdateStrategy strategy_from(const std::string& s) {
  if (s == "ordered-overwrite") return UpdateStrategy::kOrderedOverwrite;
  if (s == "argmax-single") return UpdateStrategy::kArgmaxSingle;
  if (s == "multi-value") return UpdateStrategy::kMultiValue;
  throw CLI::ValidationError(
      "--strategy", "must be ordered-overwrite, argmax-single or multi-value");
}

std::string strategy_str(UpdateStrategy s) {
  switch (s) {
    case UpdateStrategy::kOrderedOverwrite: return "ordered-overwrite";
    case UpdateStrategy::kArgmaxSingle: return "argmax-single";
    case UpdateStrategy::kMultiValue: return "multi-value";
  }
  return "ordered-overwrite";
}

Schema schema_from_csv(const std::string& csv) {
  Schema s;
  std::stringstream ss(csv);
  std::string slot;
  while (std::getline(ss, slot, ','))
    if (!slot.empty()) s.slots.push_back(slot);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::map<std::string, std::string> config_echo(const TrainConfig& c) {
  std::map<std::string, std::string> m;
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  m["lr"] = num(c.learning_rate);
  m["batch-size"] = std::to_string(c.batch_size);
  m["pos-weight"] = num(c.pos_weight);
  m["dropout"] = num(c.dropout);
  m["max-history"] = std::to_string(c.max_history);
  m["epochs"] = std::to_string(c.epochs);
  m["patience"] = std::to_string(c.patience);
  m["seed"] = std::to_string(c.seed);
  m["candidates"] = mode_str(c.candidate_mode);
  m["max-ngram-order"] = std::to_string(c.max_ngram_order);
  m["strategy"] = strategy_str(c.strategy);
  m["threshold"] = num(c.threshold);
  m["grad-clip"] = num(c.grad_clip);
  if (!c.embedding_path.empty()) m["embeddings"] = c.embedding_path;
  return m;
}

// Shared hyperparameter surface for the train subcommand. String
// holders keep enum flags overridable from a key=value config file.
struct TrainFlags {
  TrainConfig cfg;
  std::string candidates = "ngram";
  std::string strategy = "ordered-overwrite";

  void attach(CLI::App* cmd) {
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", cfg.batch_size, "examples per batch");
    cmd->add_option("--pos-weight", cfg.pos_weight,
                    "weight on positive examples in the loss");
    cmd->add_option("--dropout", cfg.dropout, "dropout rate in the classifier");
    cmd->add_option("--max-history", cfg.max_history,
                    "past utterances fed to the dialogue encoder");
    cmd->add_option("--epochs", cfg.epochs, "maximum training epochs");
    cmd->add_option("--patience", cfg.patience,
                    "epochs without dev improvement before stopping");
    cmd->add_option("--seed", cfg.seed, "master RNG seed");
    cmd->add_option("--candidates", candidates, "candidate source: ngram|slu");
    cmd->add_option("--max-ngram-order", cfg.max_ngram_order,
                    "1 = unigrams, 2 = unigrams+bigrams");
    cmd->add_option("--strategy", strategy,
                    "ordered-overwrite|argmax-single|multi-value");
    cmd->add_option("--threshold", cfg.threshold, "positive decision threshold");
    cmd->add_option("--grad-clip", cfg.grad_clip, "global gradient norm cap");
    cmd->add_option("--embeddings", cfg.embedding_path,
                    "pretrained word vectors (.vec)");
  }

  TrainConfig resolve() {
    cfg.candidate_mode = mode_from(candidates);
    cfg.strategy = strategy_from(strategy);
    return cfg;
  }
};

// Flat `key = value` config file mirroring the long flag names.
// Applied only where the flag was not given on the command line;
// unknown keys are usage errors.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError(
          "--config", path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    CLI::Option* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr || key == "config")
      throw CLI::ValidationError(
          "--config", path + ":" + std::to_string(lineno) + ": unknown key " + key);
    if (op->count() > 0) continue;  // flag on the command line wins
    try {
      op->add_result(value);
      op->run_callback();
    } catch (const CLI::ParseError&) {
      throw CLI::ValidationError(
          "--config", path + ":" + std::to_string(lineno) + ": bad value for " +
                          key + ": " + value);
    }
  }
}

int cmd_ingest(const std::string& format, const std::string& input,
               const std::string& slots_csv, const std::string& output,
               bool stats_only) {
  CorpusFormat fmt;
  if (format == "dstc2-json") {
    fmt = CorpusFormat::kDstc2Json;
  } else if (format == "internal-json") {
    fmt = CorpusFormat::kInternalJson;
  } else {
    throw CLI::ValidationError("--format",
                               "must be dstc2-json or internal-json");
  }
  Schema schema = schema_from_csv(slots_csv);
  std::vector<Dialogue> corpus = parse_corpus(input, fmt, &schema);

  CorpusStats st = corpus_stats(corpus, schema);
  std::cout << "dialogues " << st.dialogue_count << "\nturns " << st.turn_count
            << "\nmean_turns " << st.mean_turns << "\n";
  for (const std::string& s : schema.slots)
    std::cout << "values[" << s << "] " << st.distinct_values.at(s) << " (+"
              << st.distinct_values_with_sentinels.at(s) - st.distinct_values.at(s)
              << " sentinel)\n";
  if (stats_only) return 0;

  if (output.empty())
    throw CLI::ValidationError("--output", "required unless --stats-only");
  write_internal_json(output, corpus);
  std::cout << "wrote " << output << "\n";
  return 0;
}

int cmd_train(TrainFlags& flags, const std::string& corpus_path,
              const std::string& slots_csv, double dev_fraction,
              std::uint64_t split_seed, std::size_t runs,
              const std::string& output) {
  TrainConfig cfg = flags.resolve();
  Schema schema = schema_from_csv(slots_csv);
  std::vector<Dialogue> corpus =
      parse_corpus(corpus_path, CorpusFormat::kInternalJson, &schema);
  CorpusSplit split = split_corpus(corpus, dev_fraction, split_seed);

  for (const auto& [k, v] : config_echo(cfg))
    std::cout << "config " << k << " = " << v << "\n";
  std::cout << "train " << split.train.size() << " dialogues, dev "
            << split.dev.size() << "\n";

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < runs; ++i) seeds.push_back(cfg.seed + i);

  for (std::size_t i = 0; i < runs; ++i) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seeds[i];
    if (runs > 1) std::cout << "run " << i << " (seed " << seeds[i] << ")\n";
    TrainResult r = train(run_cfg, split, schema);
    for (const EpochLog& e : r.log)
      std::cout << "epoch " << e.epoch << " train_loss " << e.train_loss
                << " dev_joint " << e.dev_joint << "\n";
    std::cout << "best epoch " << r.best_epoch << " dev_joint "
              << r.best_dev_joint << "\n";
    std::string path =
        runs > 1 ? output + ".run" + std::to_string(i) : output;
    save_checkpoint(path, r);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

MetricsReport evaluate_runs(const std::vector<std::string>& ckpt_paths,
                            const std::string& corpus_path,
                            const std::string& strategy_override,
                            double threshold) {
  std::vector<Checkpoint> ckpts;
  for (const std::string& p : ckpt_paths) ckpts.push_back(load_checkpoint(p));

  Schema schema = ckpts[0].model.schema;
  std::vector<Dialogue> corpus =
      parse_corpus(corpus_path, CorpusFormat::kInternalJson, &schema);

  TrackConfig tc = ckpts[0].config.track();
  if (!strategy_override.empty()) tc.strategy = strategy_from(strategy_override);
  if (threshold >= 0.0) tc.threshold = threshold;

  // per-dialogue: track with every run, then vote
  std::vector<std::vector<DialogueState>> tracked;
  for (const Dialogue& d : corpus) {
    if (ckpts.size() == 1) {
      tracked.push_back(track_dialogue(ckpts[0].model, d, tc));
      continue;
    }
    std::vector<std::vector<DialogueState>> runs;
    for (Checkpoint& c : ckpts) runs.push_back(track_dialogue(c.model, d, tc));
    tracked.push_back(ensemble_vote(runs));
  }

  MetricsReport rep = goal_accuracy_corpus(tracked, corpus, schema);
  rep.metadata = config_echo(ckpts[0].config);
  rep.metadata["strategy"] = strategy_str(tc.strategy);
  {
    std::ostringstream os;
    os << tc.threshold;
    rep.metadata["threshold"] = os.str();
  }
  rep.metadata["corpus"] = corpus_path;
  rep.metadata["runs"] = std::to_string(ckpts.size());
  for (std::size_t i = 0; i < ckpt_paths.size(); ++i)
    rep.metadata["checkpoint" + std::to_string(i)] = ckpt_paths[i];
  return rep;
}

int cmd_eval(const std::vector<std::string>& ckpts, const std::string& corpus,
             const std::string& strategy, double threshold,
             const std::string& format, const std::string& output) {
  ReportFormat fmt;
  if (format == "json") {
    fmt = ReportFormat::kJson;
  } else if (format == "text") {
    fmt = ReportFormat::kTextTable;
  } else {
    throw CLI::ValidationError("--format", "must be text or json");
  }
  MetricsReport rep = evaluate_runs(ckpts, corpus, strategy, threshold);
  write_text(output, render_report(rep, fmt));
  return 0;
}

int cmd_synth(const SynthSpec& spec, const std::string& output) {
  write_internal_json(output, synth_corpus(spec));
  std::cout << "wrote " << output << " (" << spec.n_dialogues
            << " dialogues)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-vocabulary dialogue state tracker"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "convert/inspect a corpus");
  std::string in_format = "internal-json", in_path, in_slots, in_out;
  bool stats_only = false;
  ingest->add_option("--format", in_format, "dstc2-json|internal-json");
  ingest->add_option("--input", in_path, "corpus file or directory")->required();
  ingest->add_option("--slots", in_slots, "comma-separated slot list");
  ingest->add_option("--output", in_out, "internal-json output path");
  ingest->add_flag("--stats-only", stats_only, "print stats, write nothing");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a tracker");
  TrainFlags flags;
  std::string tr_corpus, tr_slots, tr_out = "model.ckpt";
  double dev_fraction = 0.1;
  std::uint64_t split_seed = 1;
  std::size_t runs = 1;
  train_cmd->add_option("--corpus", tr_corpus, "internal-json corpus")
      ->required();
  train_cmd->add_option("--slots", tr_slots, "comma-separated slot list");
  train_cmd->add_option("--dev-fraction", dev_fraction,
                        "fraction of dialogues held out for dev");
  train_cmd->add_option("--split-seed", split_seed, "train/dev shuffle seed");
  train_cmd->add_option("--runs", runs,
                        "train this many runs with consecutive seeds");
  train_cmd->add_option("--output", tr_out, "checkpoint path");
  flags.attach(train_cmd);
  std::string tr_config;
  train_cmd->add_option("--config", tr_config,
                        "flat key=value file; command-line flags win");

  // eval / ensemble
  std::vector<std::string> ev_ckpts;
  std::string ev_corpus, ev_strategy, ev_format = "text", ev_out;
  double ev_threshold = -1.0;
  std::size_t ens_runs = 4;
  auto add_eval_opts = [&](CLI::App* cmd, bool multi) {
    auto* o = cmd->add_option("--checkpoint", ev_ckpts, "model checkpoint");
    o->required();
    if (multi) {
      o->expected(2, 64);
      cmd->add_option("--runs", ens_runs,
                      "required number of checkpoints (default 4)");
    }
    cmd->add_option("--corpus", ev_corpus, "internal-json corpus")->required();
    cmd->add_option("--strategy", ev_strategy,
                    "override the state-update strategy");
    cmd->add_option("--threshold", ev_threshold,
                    "override the decision threshold");
    cmd->add_option("--format", ev_format, "text|json");
    cmd->add_option("--output", ev_out, "report path (default stdout)");
  };
  auto* eval_cmd = app.add_subcommand("eval", "evaluate one checkpoint");
  add_eval_opts(eval_cmd, false);
  auto* ens_cmd =
      app.add_subcommand("ensemble", "majority-vote several checkpoints");
  add_eval_opts(ens_cmd, true);

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic corpus");
  SynthSpec spec;
  std::string sy_out = "synth.json";
  synth_cmd->add_option("--dialogues", spec.n_dialogues, "dialogue count");
  synth_cmd->add_option("--slot-count", spec.n_slots, "number of slots");
  synth_cmd->add_option("--vocab", spec.vocab_size, "value vocabulary size");
  synth_cmd->add_option("--turns", spec.turns_per_dialogue,
                        "turns per dialogue");
  synth_cmd->add_option("--change-prob", spec.change_prob,
                        "per-turn slot change probability");
  synth_cmd->add_option("--multi-value-prob", spec.multi_value_prob,
                        "probability a change assigns two values");
  synth_cmd->add_option("--seed", spec.seed, "generator seed");
  synth_cmd->add_option("--output", sy_out, "internal-json output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed())
      return cmd_ingest(in_format, in_path, in_slots, in_out, stats_only);
    if (train_cmd->parsed()) {
      if (!tr_config.empty()) apply_config_file(train_cmd, tr_config);
      return cmd_train(flags, tr_corpus, tr_slots, dev_fraction, split_seed,
                       runs, tr_out);
    }
    if (eval_cmd->parsed() || ens_cmd->parsed()) {
      if (ens_cmd->parsed() && ev_ckpts.size() != ens_runs)
        throw CLI::ValidationError(
            "--checkpoint", "expected " + std::to_string(ens_runs) +
                                " checkpoints, got " +
                                std::to_string(ev_ckpts.size()) +
                                " (override with --runs)");
      return cmd_eval(ev_ckpts, ev_corpus, ev_strategy, ev_threshold, ev_format,
                      ev_out);
    }
    if (synth_cmd->parsed()) return cmd_synth(spec, sy_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dst::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
