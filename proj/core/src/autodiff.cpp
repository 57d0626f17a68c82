#include "dst/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace dst {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

const Array& Var::val() const { return tape->value(id); }
const Array& Var::grad() const { return const_cast<Tape*>(tape)->grad(id); }

Var Tape::constant(Array v) {
  nodes_.push_back(Node{std::move(v), {}, nullptr, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Param& p) {
  nodes_.push_back(Node{p.value, {}, nullptr, true, &p});
  return Var{this, nodes_.size() - 1};
}

Var Tape::make(Array v, bool requires_grad,
               std::function<void(Tape&, std::size_t)> backprop) {
  if (!v.all_finite())
    throw std::runtime_error("autodiff: non-finite value produced");
  nodes_.push_back(Node{std::move(v), {}, std::move(backprop), requires_grad, nullptr});
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: foreign var");
  if (loss.val().size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                loss.val().shape_str());
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.grad.shape = n.value.shape;
      n.grad.data.assign(n.value.data.size(), 0.0);
    }
  }
  nodes_[loss.id].grad.data[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backprop) n.backprop(*this, i);
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.param != nullptr) {
      Array& g = n.param->grad;
      for (std::size_t j = 0; j < g.data.size(); ++j) g.data[j] += n.grad.data[j];
    }
  }
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape)
    throw std::invalid_argument(std::string(op) + ": vars from different tapes");
}

[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              a.shape_str() + " vs " + b.shape_str());
}

Var unary_elementwise(Var x, double (*f)(double), double (*df)(double, double)) {
  const Array& xv = x.val();
  Array out(xv.shape.empty() ? Array::scalar(0.0) : Array::zeros(xv.shape));
  out.shape = xv.shape;
  out.data.resize(xv.data.size());
  for (std::size_t i = 0; i < xv.data.size(); ++i) out.data[i] = f(xv.data[i]);
  std::size_t xid = x.id;
  return x.tape->make(std::move(out), x.tape->needs_grad(xid),
                      [xid, df](Tape& t, std::size_t self) {
                        const Array& g = t.grad(self);
                        const Array& xv2 = t.value(xid);
                        const Array& yv = t.value(self);
                        if (!t.needs_grad(xid)) return;
                        Array& xg = t.grad(xid);
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                          xg.data[i] += g.data[i] * df(xv2.data[i], yv.data[i]);
                      });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Array& av = a.val();
  const Array& bv = b.val();
  bool b_is_vec = bv.rank() == 1;
  if (av.rank() != 2 || (bv.rank() != 2 && bv.rank() != 1) ||
      av.shape[1] != bv.shape[0])
    shape_error("matmul", av, bv);
  std::size_t m = av.shape[0], k = av.shape[1], n = b_is_vec ? 1 : bv.shape[1];
  Array out(b_is_vec ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n});
  CMapMat A(av.data.data(), m, k), B(bv.data.data(), k, n);
  MapMat C(out.data.data(), m, n);
  C.noalias() = A * B;
  std::size_t aid = a.id, bid = b.id;
  bool rg = a.tape->needs_grad(aid) || a.tape->needs_grad(bid);
  return a.tape->make(std::move(out), rg, [aid, bid, m, k, n](Tape& t, std::size_t self) {
    CMapMat G(t.grad(self).data.data(), m, n);
    CMapMat A2(t.value(aid).data.data(), m, k);
    CMapMat B2(t.value(bid).data.data(), k, n);
    if (t.needs_grad(aid)) {
      MapMat GA(t.grad(aid).data.data(), m, k);
      GA.noalias() += G * B2.transpose();
    }
    if (t.needs_grad(bid)) {
      MapMat GB(t.grad(bid).data.data(), k, n);
      GB.noalias() += A2.transpose() * G;
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  const Array& av = a.val();
  const Array& bv = b.val();
  std::size_t aid = a.id, bid = b.id;
  bool rg = a.tape->needs_grad(aid) || a.tape->needs_grad(bid);
  if (av.same_shape(bv)) {
    Array out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    return a.tape->make(std::move(out), rg, [aid, bid](Tape& t, std::size_t self) {
      const Array& g = t.grad(self);
      for (std::size_t id : {aid, bid}) {
        if (!t.needs_grad(id)) continue;
        Array& xg = t.grad(id);
        for (std::size_t i = 0; i < g.data.size(); ++i) xg.data[i] += g.data[i];
      }
    });
  }
  // [m,n] + [n] row broadcast
  if (av.rank() == 2 && bv.rank() == 1 && av.shape[1] == bv.shape[0]) {
    Array out = av;
    std::size_t m = av.shape[0], n = av.shape[1];
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) out.data[r * n + c] += bv.data[c];
    return a.tape->make(std::move(out), rg, [aid, bid, m, n](Tape& t, std::size_t self) {
      const Array& g = t.grad(self);
      if (t.needs_grad(aid)) {
        Array& ag = t.grad(aid);
        for (std::size_t i = 0; i < g.data.size(); ++i) ag.data[i] += g.data[i];
      }
      if (t.needs_grad(bid)) {
        Array& bg = t.grad(bid);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) bg.data[c] += g.data[r * n + c];
      }
    });
  }
  shape_error("add", av, bv);
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  const Array& av = a.val();
  const Array& bv = b.val();
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Array out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  std::size_t aid = a.id, bid = b.id;
  bool rg = a.tape->needs_grad(aid) || a.tape->needs_grad(bid);
  return a.tape->make(std::move(out), rg, [aid, bid](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& av2 = t.value(aid);
    const Array& bv2 = t.value(bid);
    if (t.needs_grad(aid)) {
      Array& ag = t.grad(aid);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        ag.data[i] += g.data[i] * bv2.data[i];
    }
    if (t.needs_grad(bid)) {
      Array& bg = t.grad(bid);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        bg.data[i] += g.data[i] * av2.data[i];
    }
  });
}

Var scale(Var a, double c) {
  Array out = a.val();
  for (double& v : out.data) v *= c;
  std::size_t aid = a.id;
  return a.tape->make(std::move(out), a.tape->needs_grad(aid),
                      [aid, c](Tape& t, std::size_t self) {
                        if (!t.needs_grad(aid)) return;
                        const Array& g = t.grad(self);
                        Array& ag = t.grad(aid);
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                          ag.data[i] += c * g.data[i];
                      });
}

Var add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty input");
  Var acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return acc;
}

Var concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input");
  std::size_t total = 0;
  bool rg = false;
  for (Var x : xs) {
    if (x.val().rank() != 1)
      throw std::invalid_argument("concat: expects 1-D vars, got " +
                                  x.val().shape_str());
    total += x.val().shape[0];
    rg = rg || x.tape->needs_grad(x.id);
  }
  Array out(std::vector<std::size_t>{total});
  std::size_t off = 0;
  std::vector<std::pair<std::size_t, std::size_t>> parts;  // (id, offset)
  for (Var x : xs) {
    const Array& v = x.val();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + off);
    parts.emplace_back(x.id, off);
    off += v.data.size();
  }
  return xs[0].tape->make(std::move(out), rg,
                          [parts](Tape& t, std::size_t self) {
                            const Array& g = t.grad(self);
                            for (auto [id, o] : parts) {
                              if (!t.needs_grad(id)) continue;
                              Array& xg = t.grad(id);
                              for (std::size_t i = 0; i < xg.data.size(); ++i)
                                xg.data[i] += g.data[o + i];
                            }
                          });
}

Var sigmoid(Var x) {
  return unary_elementwise(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh_op(Var x) {
  return unary_elementwise(x, [](double v) { return std::tanh(v); },
                           [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary_elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; },
                           [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var dropout(Var x, double rate, std::mt19937_64& rng, bool train) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!train || rate == 0.0) return x;
  const Array& xv = x.val();
  auto mask = std::make_shared<std::vector<double>>(xv.data.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : *mask) m = (u(rng) < rate) ? 0.0 : keep_scale;
  Array out = xv;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= (*mask)[i];
  std::size_t xid = x.id;
  return x.tape->make(std::move(out), x.tape->needs_grad(xid),
                      [xid, mask](Tape& t, std::size_t self) {
                        if (!t.needs_grad(xid)) return;
                        const Array& g = t.grad(self);
                        Array& xg = t.grad(xid);
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                          xg.data[i] += g.data[i] * (*mask)[i];
                      });
}

Var gather_rows(Var table, const std::vector<std::size_t>& idx) {
  const Array& tv = table.val();
  if (tv.rank() != 2)
    throw std::invalid_argument("gather_rows: table must be 2-D, got " +
                                tv.shape_str());
  std::size_t d = tv.shape[1];
  if (idx.empty()) throw std::invalid_argument("gather_rows: empty index list");
  for (std::size_t i : idx)
    if (i >= tv.shape[0])
      throw std::out_of_range("gather_rows: row index out of range");
  Array out(std::vector<std::size_t>{idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(tv.data.begin() + idx[r] * d, tv.data.begin() + (idx[r] + 1) * d,
              out.data.begin() + r * d);
  std::size_t tid = table.id;
  return table.tape->make(std::move(out), table.tape->needs_grad(tid),
                          [tid, idx, d](Tape& t, std::size_t self) {
                            if (!t.needs_grad(tid)) return;
                            const Array& g = t.grad(self);
                            Array& tg = t.grad(tid);
                            for (std::size_t r = 0; r < idx.size(); ++r)
                              for (std::size_t c = 0; c < d; ++c)
                                tg.data[idx[r] * d + c] += g.data[r * d + c];
                          });
}

Var slice(Var x, std::size_t begin, std::size_t end) {
  const Array& xv = x.val();
  if (xv.rank() != 1)
    throw std::invalid_argument("slice: expects 1-D var, got " + xv.shape_str());
  if (begin >= end || end > xv.shape[0])
    throw std::invalid_argument("slice: bad range");
  Array out(std::vector<std::size_t>{end - begin});
  std::copy(xv.data.begin() + begin, xv.data.begin() + end, out.data.begin());
  std::size_t xid = x.id;
  return x.tape->make(std::move(out), x.tape->needs_grad(xid),
                      [xid, begin](Tape& t, std::size_t self) {
                        if (!t.needs_grad(xid)) return;
                        const Array& g = t.grad(self);
                        Array& xg = t.grad(xid);
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                          xg.data[begin + i] += g.data[i];
                      });
}

Var mean(Var x) {
  const Array& xv = x.val();
  double n = static_cast<double>(xv.data.size());
  double s = std::accumulate(xv.data.begin(), xv.data.end(), 0.0);
  std::size_t xid = x.id;
  return x.tape->make(Array::scalar(s / n), x.tape->needs_grad(xid),
                      [xid, n](Tape& t, std::size_t self) {
                        if (!t.needs_grad(xid)) return;
                        double g = t.grad(self).data[0] / n;
                        Array& xg = t.grad(xid);
                        for (double& v : xg.data) v += g;
                      });
}

Var mean_rows(Var x) {
  const Array& xv = x.val();
  if (xv.rank() != 2)
    throw std::invalid_argument("mean_rows: expects 2-D var, got " +
                                xv.shape_str());
  std::size_t k = xv.shape[0], d = xv.shape[1];
  Array out(std::vector<std::size_t>{d});
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < d; ++c) out.data[c] += xv.data[r * d + c];
  for (double& v : out.data) v /= static_cast<double>(k);
  std::size_t xid = x.id;
  return x.tape->make(std::move(out), x.tape->needs_grad(xid),
                      [xid, k, d](Tape& t, std::size_t self) {
                        if (!t.needs_grad(xid)) return;
                        const Array& g = t.grad(self);
                        Array& xg = t.grad(xid);
                        for (std::size_t r = 0; r < k; ++r)
                          for (std::size_t c = 0; c < d; ++c)
                            xg.data[r * d + c] += g.data[c] / static_cast<double>(k);
                      });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
  std::size_t d = rows[0].val().shape[0];
  bool rg = false;
  for (Var r : rows) {
    if (r.val().rank() != 1 || r.val().shape[0] != d)
      throw std::invalid_argument("stack_rows: rows must be 1-D of equal size");
    rg = rg || r.tape->needs_grad(r.id);
  }
  Array out(std::vector<std::size_t>{rows.size(), d});
  std::vector<std::size_t> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Array& v = rows[r].val();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + r * d);
    ids.push_back(rows[r].id);
  }
  return rows[0].tape->make(std::move(out), rg,
                            [ids, d](Tape& t, std::size_t self) {
                              const Array& g = t.grad(self);
                              for (std::size_t r = 0; r < ids.size(); ++r) {
                                if (!t.needs_grad(ids[r])) continue;
                                Array& xg = t.grad(ids[r]);
                                for (std::size_t c = 0; c < d; ++c)
                                  xg.data[c] += g.data[r * d + c];
                              }
                            });
}

Var weighted_bce_sum(Var logits, const std::vector<double>& labels,
                     double pos_weight) {
  const Array& lv = logits.val();
  if (lv.data.size() != labels.size())
    throw std::invalid_argument("weighted_bce_sum: logits/labels size mismatch");
  static constexpr double kEps = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-lv.data[i]));
    double pc = std::clamp(p, kEps, 1.0 - kEps);
    total -= pos_weight * labels[i] * std::log(pc) +
             (1.0 - labels[i]) * std::log(1.0 - pc);
  }
  std::size_t lid = logits.id;
  return logits.tape->make(
      Array::scalar(total), logits.tape->needs_grad(lid),
      [lid, labels, pos_weight](Tape& t, std::size_t self) {
        if (!t.needs_grad(lid)) return;
        double g = t.grad(self).data[0];
        const Array& lv2 = t.value(lid);
        Array& lg = t.grad(lid);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          double p = 1.0 / (1.0 + std::exp(-lv2.data[i]));
          double pc = std::clamp(p, kEps, 1.0 - kEps);
          // dL/dp through the clamp, then dp/dlogit = p(1-p)
          double dldp = (p == pc)
                            ? -pos_weight * labels[i] / pc +
                                  (1.0 - labels[i]) / (1.0 - pc)
                            : 0.0;
          lg.data[i] += g * dldp * p * (1.0 - p);
        }
      });
}

double check_gradients(const std::function<double(bool)>& run,
                       const std::vector<Param*>& params, double eps,
                       std::size_t max_entries_per_param,
                       std::uint64_t sample_seed) {
  if (eps <= 0.0) throw std::invalid_argument("check_gradients: eps must be > 0");
  run(true);
  std::vector<std::vector<double>> analytic;
  for (Param* p : params) analytic.push_back(p->grad.data);

  std::mt19937_64 rng(sample_seed);
  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    std::vector<std::size_t> entries(p->value.data.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (entries.size() > max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_entries_per_param);
    }
    for (std::size_t i : entries) {
      double saved = p->value.data[i];
      p->value.data[i] = saved + eps;
      double up = run(false);
      p->value.data[i] = saved - eps;
      double down = run(false);
      p->value.data[i] = saved;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[pi][i];
      // The 1e-6 floor compares near-zero gradients absolutely; below
      // it, central differences are dominated by cancellation noise of
      // order |loss| * machine_eps / eps.
      double rel = std::abs(a - numeric) /
                   std::max(1e-6, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace dst
