#include "dst/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dst {

namespace {

EmbeddingTable make_table(const std::string& name,
                          const std::vector<std::string>& tokens,
                          std::size_t dim, bool with_dontcare) {
  EmbeddingTable t;
  t.dim = dim;
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  uniq.erase(kDontcare);  // the dontcare candidate has its own row
  std::size_t row = 0;
  for (const std::string& tok : uniq) t.vocab[tok] = row++;
  t.oov_row = row++;
  t.dontcare_row = with_dontcare ? row++ : t.oov_row;
  t.matrix = Param(name, {row, dim});
  return t;
}

LstmParams make_lstm(const std::string& name, std::size_t input,
                     std::size_t hidden) {
  LstmParams l;
  l.input = input;
  l.hidden = hidden;
  l.wx = Param(name + ".wx", {4 * hidden, input});
  l.wh = Param(name + ".wh", {4 * hidden, hidden});
  l.b = Param(name + ".b", {4 * hidden});
  return l;
}

}  // namespace

Model Model::build(const Schema& schema,
                   const std::vector<std::string>& word_vocab,
                   const std::vector<std::string>& act_vocab,
                   const ModelDims& dims) {
  Model m;
  m.dims = dims;
  m.schema = schema;
  m.words = make_table("words", word_vocab, dims.word_dim, true);
  m.acts = make_table("acts", act_vocab, dims.act_emb_dim, false);
  m.sent_lstm = make_lstm("sent_lstm", dims.word_dim, dims.sent_hidden);
  m.dial_lstm = make_lstm("dial_lstm", dims.sent_hidden, dims.dial_hidden);
  m.act_lstm = make_lstm("act_lstm", dims.act_emb_dim, dims.act_hidden);
  for (const std::string& slot : schema.slots) {
    m.state_emb.emplace_back("state_emb." + slot,
                             std::vector<std::size_t>{kNumSlotStatuses,
                                                      dims.state_emb_dim});
    SlotHead h;
    h.w1 = Param("head." + slot + ".w1", {dims.head_input_dim(), dims.fc1});
    h.b1 = Param("head." + slot + ".b1", {dims.fc1});
    h.w2 = Param("head." + slot + ".w2", {dims.fc1, dims.fc2});
    h.b2 = Param("head." + slot + ".b2", {dims.fc2});
    h.w3 = Param("head." + slot + ".w3", {dims.fc2, 1});
    h.b3 = Param("head." + slot + ".b3", {1});
    m.heads.push_back(std::move(h));
  }
  return m;
}

void Model::init_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (Param* p : parameters()) {
    bool is_bias = p->name.ends_with(".b") || p->name.ends_with(".b1") ||
                   p->name.ends_with(".b2") || p->name.ends_with(".b3");
    if (is_bias) {
      p->value.fill(0.0);
    } else {
      for (double& v : p->value.data) v = u(rng);
    }
  }
  for (LstmParams* l : {&sent_lstm, &dial_lstm, &act_lstm}) {
    for (std::size_t i = l->hidden; i < 2 * l->hidden; ++i)
      l->b.value.data[i] = 1.0;  // forget gate
  }
}

std::vector<Param*> Model::parameters() {
  std::vector<Param*> ps{&words.matrix, &acts.matrix};
  for (LstmParams* l : {&sent_lstm, &dial_lstm, &act_lstm}) {
    ps.push_back(&l->wx);
    ps.push_back(&l->wh);
    ps.push_back(&l->b);
  }
  for (Param& p : state_emb) ps.push_back(&p);
  for (SlotHead& h : heads) {
    for (Param* p : {&h.w1, &h.b1, &h.w2, &h.b2, &h.w3, &h.b3}) ps.push_back(p);
  }
  return ps;
}

void Model::zero_grads() {
  for (Param* p : parameters()) p->zero_grad();
}

std::vector<std::string> collect_word_vocab(const std::vector<Dialogue>& corpus) {
  std::set<std::string> toks;
  for (const Dialogue& d : corpus) {
    for (const Turn& t : d.turns) {
      toks.insert(t.user_tokens.begin(), t.user_tokens.end());
      for (const auto& [s, v] : t.slu) {
        auto parts = normalize(v);
        toks.insert(parts.begin(), parts.end());
      }
    }
  }
  return {toks.begin(), toks.end()};
}

std::vector<std::string> collect_act_vocab(const std::vector<Dialogue>& corpus) {
  std::set<std::string> acts;
  for (const Dialogue& d : corpus)
    for (const Turn& t : d.turns)
      for (const DialogueAct& a : t.system_acts) acts.insert(a.render());
  return {acts.begin(), acts.end()};
}

}  // namespace dst
