#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dst/array.hpp"

namespace dst {

// A trainable tensor living outside any tape. Gradients accumulate here
// when a tape that references the parameter runs backward.
struct Param {
  std::string name;
  Array value;
  Array grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(Array::zeros(shape)), grad(Array::zeros(shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Array& val() const;
  const Array& grad() const;
  bool valid() const { return tape != nullptr; }
};

// Reverse-mode tape. Nodes are stored in creation order; backward walks
// them in reverse, which fixes the gradient accumulation order.
class Tape {
 public:
  struct Node {
    Array value;
    Array grad;  // allocated lazily by backward()
    std::function<void(Tape&, std::size_t)> backprop;
    bool requires_grad = false;
    Param* param = nullptr;  // set for leaves bound to a Param
  };

  Var constant(Array v);
  Var leaf(Param& p);
  Var make(Array v, bool requires_grad,
           std::function<void(Tape&, std::size_t)> backprop);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  Array& grad(std::size_t id) { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // loss must be scalar. Accumulates into every bound Param's grad.
  void backward(Var loss);

 private:
  std::deque<Node> nodes_;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);            // [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m]
Var add(Var a, Var b);               // same shape, or [m,n]+[n] row broadcast
Var mul(Var a, Var b);               // elementwise
Var scale(Var a, double c);
Var add_n(const std::vector<Var>& xs);
Var concat(const std::vector<Var>& xs);  // 1-D vectors
Var sigmoid(Var x);
Var tanh_op(Var x);
Var relu(Var x);
// Seeded mask, scaled by 1/(1-rate) when train; identity when !train.
Var dropout(Var x, double rate, std::mt19937_64& rng, bool train);
Var gather_rows(Var table, const std::vector<std::size_t>& idx);  // -> [k,d]
Var slice(Var x, std::size_t begin, std::size_t end);             // 1-D
Var mean(Var x);                     // -> scalar
Var mean_rows(Var x);                // [k,d] -> [d]
Var stack_rows(const std::vector<Var>& rows);  // k vectors [d] -> [k,d]

// Sum over examples of -[w*y*log p + (1-y)*log(1-p)], p = sigmoid(logit)
// clamped to [1e-7, 1-1e-7]. logits is [k] or [k,1].
Var weighted_bce_sum(Var logits, const std::vector<double>& labels,
                     double pos_weight);

// ---- verification ---------------------------------------------------------

// run(true): zero grads, forward + backward, return loss.
// run(false): forward only, return loss.
// Central differences against the analytic grads of every listed Param.
// When max_entries_per_param limits the sweep, entries are sampled with
// sample_seed.
double check_gradients(const std::function<double(bool)>& run,
                       const std::vector<Param*>& params, double eps,
                       std::size_t max_entries_per_param = SIZE_MAX,
                       std::uint64_t sample_seed = 0);

}  // namespace dst
