#include <cstring>
#include <fstream>

#include "dst/trainer.hpp"
#include "json.hpp"

using nlohmann::json;

namespace dst {

namespace {

constexpr char kMagic[8] = {'O', 'D', 'S', 'T', 'C', 'K', 'P', '1'};

std::string mode_str(CandidateMode m) {
  return m == CandidateMode::kNgram ? "ngram" : "slu";
}

CandidateMode mode_from(const std::string& s) {
  if (s == "ngram") return CandidateMode::kNgram;
  if (s == "slu") return CandidateMode::kSlu;
  throw ParseError("checkpoint: unknown candidate mode " + s);
}

std::string strategy_str(UpdateStrategy s) {
  switch (s) {
    case UpdateStrategy::kOrderedOverwrite: return "ordered-overwrite";
    case UpdateStrategy::kArgmaxSingle: return "argmax-single";
    case UpdateStrategy::kMultiValue: return "multi-value";
  }
  return "ordered-overwrite";
}

UpdateStrategy strategy_from(const std::string& s) {
  if (s == "ordered-overwrite") return UpdateStrategy::kOrderedOverwrite;
  if (s == "argmax-single") return UpdateStrategy::kArgmaxSingle;
  if (s == "multi-value") return UpdateStrategy::kMultiValue;
  throw ParseError("checkpoint: unknown strategy " + s);
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["pos_weight"] = c.pos_weight;
  j["dropout"] = c.dropout;
  j["max_history"] = c.max_history;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["candidate_mode"] = mode_str(c.candidate_mode);
  j["max_ngram_order"] = c.max_ngram_order;
  j["strategy"] = strategy_str(c.strategy);
  j["threshold"] = c.threshold;
  j["grad_clip"] = c.grad_clip;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["embedding_path"] = c.embedding_path;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.pos_weight = j.at("pos_weight").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.max_history = j.at("max_history").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.candidate_mode = mode_from(j.at("candidate_mode").get<std::string>());
  c.max_ngram_order = j.at("max_ngram_order").get<int>();
  c.strategy = strategy_from(j.at("strategy").get<std::string>());
  c.threshold = j.at("threshold").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.embedding_path = j.at("embedding_path").get<std::string>();
  return c;
}

std::vector<std::string> vocab_rows(const EmbeddingTable& t) {
  std::vector<std::string> rows(t.vocab.size());
  for (const auto& [tok, row] : t.vocab) rows[row] = tok;
  return rows;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainResult& r) {
  const Model& m = r.model;
  json meta;
  meta["version"] = 1;
  meta["config"] = config_to_json(r.config);
  meta["schema"] = m.schema.slots;
  meta["word_vocab"] = vocab_rows(m.words);
  meta["act_vocab"] = vocab_rows(m.acts);
  json dims;
  dims["word_dim"] = m.dims.word_dim;
  dims["sent_hidden"] = m.dims.sent_hidden;
  dims["dial_hidden"] = m.dims.dial_hidden;
  dims["act_emb_dim"] = m.dims.act_emb_dim;
  dims["act_hidden"] = m.dims.act_hidden;
  dims["state_emb_dim"] = m.dims.state_emb_dim;
  dims["fc1"] = m.dims.fc1;
  dims["fc2"] = m.dims.fc2;
  dims["max_history"] = m.dims.max_history;
  meta["dims"] = dims;
  meta["epoch"] = r.best_epoch;
  meta["dev_metric"] = r.best_dev_joint;
  meta["rng_state"] = r.rng_state;
  json plist = json::array();
  for (Param* p : const_cast<Model&>(m).parameters()) {
    json pj;
    pj["name"] = p->name;
    pj["shape"] = p->value.shape;
    plist.push_back(std::move(pj));
  }
  meta["params"] = plist;
  std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t len = meta_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(meta_str.data(), static_cast<std::streamsize>(len));
  for (Param* p : const_cast<Model&>(m).parameters()) {
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  if (!out) throw ParseError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a checkpoint file (bad magic)");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string meta_str(len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError(path + ": truncated checkpoint metadata");
  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad checkpoint metadata: " + e.what());
  }

  Checkpoint ck;
  ck.config = config_from_json(meta.at("config"));
  ck.epoch = meta.at("epoch").get<std::size_t>();
  ck.dev_metric = meta.at("dev_metric").get<double>();
  ck.rng_state = meta.at("rng_state").get<std::string>();

  Schema schema;
  schema.slots = meta.at("schema").get<std::vector<std::string>>();
  ModelDims dims;
  const json& dj = meta.at("dims");
  dims.word_dim = dj.at("word_dim").get<std::size_t>();
  dims.sent_hidden = dj.at("sent_hidden").get<std::size_t>();
  dims.dial_hidden = dj.at("dial_hidden").get<std::size_t>();
  dims.act_emb_dim = dj.at("act_emb_dim").get<std::size_t>();
  dims.act_hidden = dj.at("act_hidden").get<std::size_t>();
  dims.state_emb_dim = dj.at("state_emb_dim").get<std::size_t>();
  dims.fc1 = dj.at("fc1").get<std::size_t>();
  dims.fc2 = dj.at("fc2").get<std::size_t>();
  dims.max_history = dj.at("max_history").get<std::size_t>();
  ck.model = Model::build(schema,
                          meta.at("word_vocab").get<std::vector<std::string>>(),
                          meta.at("act_vocab").get<std::vector<std::string>>(),
                          dims);

  std::vector<Param*> params = ck.model.parameters();
  const json& plist = meta.at("params");
  if (plist.size() != params.size())
    throw ParseError(path + ": checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (plist[i].at("name").get<std::string>() != params[i]->name ||
        plist[i].at("shape").get<std::vector<std::size_t>>() !=
            params[i]->value.shape)
      throw ParseError(path + ": checkpoint parameter layout mismatch at " +
                       params[i]->name);
    in.read(reinterpret_cast<char*>(params[i]->value.data.data()),
            static_cast<std::streamsize>(params[i]->value.data.size() *
                                         sizeof(double)));
  }
  if (!in) throw ParseError(path + ": truncated checkpoint data");
  return ck;
}

}  // namespace dst
