#pragma once

#include <vector>

#include "sentigen/tensor.hpp"

namespace sentigen {

class Tape;

// Handle to a tensor living on a tape.
struct Var {
  Tape* tape = nullptr;
  int index = -1;
};

// Append-only record of forward operations. Node indices are a topological
// order by construction, so the backward pass is a single reverse sweep.
// One tape per training example or mini-batch; tapes are not thread-shared.
class Tape {
 public:
  // Inputs. Leaves are gradient-tracked (parameters); constants are inputs
  // whose gradient nobody reads (features, injected label scalars).
  Var leaf(const Tensor& t);
  Var constant(const Tensor& t);

  // (m x k) * (k x n) -> (m x n); also accepts a 1-D right operand of
  // length k and returns a 1-D result of length m.
  Var matmul(Var a, Var b);

  // Pointwise, identical shapes.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);

  Var sigmoid(Var a);
  Var tanh(Var a);

  // Join along `axis`; all other axes must agree.
  Var concat(Var a, Var b, int axis);

  // 1-D subrange [start, start+len).
  Var slice(Var a, int start, int len);

  // Row `row` of a (V x d) table. Gradient accumulates into that row only.
  Var lookup(Var table, int row);

  // -log softmax(logits)[gold], max-subtracted. Scalar result.
  Var softmax_cross_entropy(Var logits, int gold);

  // c * a for a compile-time-known constant c (no gradient w.r.t. c).
  Var scale(Var a, double c);

  // Scalar sum of all elements.
  Var sum(Var a);

  const Tensor& value(Var v) const;

  // Reverse sweep from `loss` (must be a scalar on this tape). Gradients of
  // all nodes are (re)computed; earlier backward results are discarded.
  void backward(Var loss);

  // Gradient of the last backward target w.r.t. `v`.
  const Tensor& grad(Var v) const;

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf,
    kConstant,
    kMatMul,
    kAdd,
    kMul,
    kSigmoid,
    kTanh,
    kConcat,
    kSlice,
    kLookup,
    kSoftmaxXent,
    kScale,
    kSum,
  };

  struct Node {
    Node(Op o, Tensor v) : op(o), value(std::move(v)) {}
    Op op;
    Tensor value;
    int a = -1;
    int b = -1;
    int aux0 = 0;       // concat axis / slice start / lookup row / gold id
    int aux1 = 0;       // slice len
    double factor = 0;  // scale
    Tensor saved;       // softmax probabilities
  };

  int check(Var v) const;
  Var push(Node n);
  void accumulate(int node, const Tensor& g);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace sentigen
