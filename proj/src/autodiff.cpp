#include "sentigen/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace sentigen {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// outer/inner strides around `axis` for a row-major shape
void axis_strides(const std::vector<int>& shape, int axis, size_t* outer, size_t* inner) {
  size_t o = 1, in = 1;
  for (int i = 0; i < axis; ++i) o *= static_cast<size_t>(shape[static_cast<size_t>(i)]);
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i)
    in *= static_cast<size_t>(shape[i]);
  *outer = o;
  *inner = in;
}

}  // namespace

int Tape::check(Var v) const {
  if (v.tape != this || v.index < 0 || static_cast<size_t>(v.index) >= nodes_.size())
    throw std::invalid_argument("tape: variable does not belong to this tape");
  return v.index;
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(const Tensor& t) { return push(Node{Op::kLeaf, t}); }

Var Tape::constant(const Tensor& t) { return push(Node{Op::kConstant, t}); }

Var Tape::matmul(Var va, Var vb) {
  int ia = check(va), ib = check(vb);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  const Tensor& b = nodes_[static_cast<size_t>(ib)].value;
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2))
    throw std::invalid_argument("matmul: need (m x k) by (k [x n]), got " + a.shape_string() +
                                " and " + b.shape_string());
  int m = a.dim(0), k = a.dim(1);
  int bk = b.dim(0);
  int n = b.rank() == 2 ? b.dim(1) : 1;
  if (k != bk)
    throw std::invalid_argument("matmul: inner dimensions differ: " + a.shape_string() + " vs " +
                                b.shape_string());
  Tensor out(b.rank() == 2 ? std::vector<int>{m, n} : std::vector<int>{m});
  for (int i = 0; i < m; ++i) {
    const double* arow = a.data() + static_cast<size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * b[static_cast<size_t>(p) * n + j];
      out[static_cast<size_t>(i) * n + j] = acc;
    }
  }
  Node node{Op::kMatMul, std::move(out)};
  node.a = ia;
  node.b = ib;
  return push(std::move(node));
}

Var Tape::add(Var va, Var vb) {
  int ia = check(va), ib = check(vb);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  const Tensor& b = nodes_[static_cast<size_t>(ib)].value;
  if (!a.same_shape(b))
    throw std::invalid_argument("add: shape mismatch: " + a.shape_string() + " vs " +
                                b.shape_string());
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  Node node{Op::kAdd, std::move(out)};
  node.a = ia;
  node.b = ib;
  return push(std::move(node));
}

Var Tape::mul(Var va, Var vb) {
  int ia = check(va), ib = check(vb);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  const Tensor& b = nodes_[static_cast<size_t>(ib)].value;
  if (!a.same_shape(b))
    throw std::invalid_argument("mul: shape mismatch: " + a.shape_string() + " vs " +
                                b.shape_string());
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  Node node{Op::kMul, std::move(out)};
  node.a = ia;
  node.b = ib;
  return push(std::move(node));
}

Var Tape::sigmoid(Var va) {
  int ia = check(va);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) out[i] = stable_sigmoid(a[i]);
  Node node{Op::kSigmoid, std::move(out)};
  node.a = ia;
  return push(std::move(node));
}

Var Tape::tanh(Var va) {
  int ia = check(va);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
  Node node{Op::kTanh, std::move(out)};
  node.a = ia;
  return push(std::move(node));
}

Var Tape::concat(Var va, Var vb, int axis) {
  int ia = check(va), ib = check(vb);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  const Tensor& b = nodes_[static_cast<size_t>(ib)].value;
  if (a.rank() != b.rank() || axis < 0 || axis >= a.rank())
    throw std::invalid_argument("concat: incompatible shapes " + a.shape_string() + " and " +
                                b.shape_string());
  for (int i = 0; i < a.rank(); ++i)
    if (i != axis && a.dim(i) != b.dim(i))
      throw std::invalid_argument("concat: incompatible shapes " + a.shape_string() + " and " +
                                  b.shape_string());
  std::vector<int> oshape = a.shape();
  oshape[static_cast<size_t>(axis)] = a.dim(axis) + b.dim(axis);
  Tensor out(oshape);
  size_t outer, inner;
  axis_strides(oshape, axis, &outer, &inner);
  size_t a_block = static_cast<size_t>(a.dim(axis)) * inner;
  size_t b_block = static_cast<size_t>(b.dim(axis)) * inner;
  for (size_t o = 0; o < outer; ++o) {
    double* dst = out.data() + o * (a_block + b_block);
    const double* pa = a.data() + o * a_block;
    const double* pb = b.data() + o * b_block;
    for (size_t i = 0; i < a_block; ++i) dst[i] = pa[i];
    for (size_t i = 0; i < b_block; ++i) dst[a_block + i] = pb[i];
  }
  Node node{Op::kConcat, std::move(out)};
  node.a = ia;
  node.b = ib;
  node.aux0 = axis;
  return push(std::move(node));
}

Var Tape::slice(Var va, int start, int len) {
  int ia = check(va);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  if (a.rank() != 1) throw std::invalid_argument("slice: 1-D input required");
  if (start < 0 || len < 0 || start + len > a.dim(0))
    throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + a.shape_string());
  Tensor out({len});
  for (int i = 0; i < len; ++i) out[static_cast<size_t>(i)] = a[static_cast<size_t>(start + i)];
  Node node{Op::kSlice, std::move(out)};
  node.a = ia;
  node.aux0 = start;
  node.aux1 = len;
  return push(std::move(node));
}

Var Tape::lookup(Var vtable, int row) {
  int it = check(vtable);
  const Tensor& t = nodes_[static_cast<size_t>(it)].value;
  if (t.rank() != 2) throw std::invalid_argument("lookup: table must be 2-D");
  if (row < 0 || row >= t.dim(0))
    throw std::out_of_range("lookup: row " + std::to_string(row) + " out of " + t.shape_string());
  int d = t.dim(1);
  Tensor out({d});
  const double* src = t.data() + static_cast<size_t>(row) * d;
  for (int i = 0; i < d; ++i) out[static_cast<size_t>(i)] = src[i];
  Node node{Op::kLookup, std::move(out)};
  node.a = it;
  node.aux0 = row;
  return push(std::move(node));
}

Var Tape::softmax_cross_entropy(Var vlogits, int gold) {
  int il = check(vlogits);
  const Tensor& logits = nodes_[static_cast<size_t>(il)].value;
  if (logits.rank() != 1) throw std::invalid_argument("softmax_cross_entropy: 1-D logits required");
  int k = logits.dim(0);
  if (gold < 0 || gold >= k)
    throw std::out_of_range("softmax_cross_entropy: gold " + std::to_string(gold) + " out of " +
                            std::to_string(k) + " classes");
  double mx = logits[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits[static_cast<size_t>(i)]);
  double denom = 0.0;
  Tensor probs({k});
  for (int i = 0; i < k; ++i) {
    probs[static_cast<size_t>(i)] = std::exp(logits[static_cast<size_t>(i)] - mx);
    denom += probs[static_cast<size_t>(i)];
  }
  for (int i = 0; i < k; ++i) probs[static_cast<size_t>(i)] /= denom;
  double loss = std::log(denom) - (logits[static_cast<size_t>(gold)] - mx);
  Node node{Op::kSoftmaxXent, Tensor::scalar(loss)};
  node.a = il;
  node.aux0 = gold;
  node.saved = std::move(probs);
  return push(std::move(node));
}

Var Tape::scale(Var va, double c) {
  int ia = check(va);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  Node node{Op::kScale, std::move(out)};
  node.a = ia;
  node.factor = c;
  return push(std::move(node));
}

Var Tape::sum(Var va) {
  int ia = check(va);
  const Tensor& a = nodes_[static_cast<size_t>(ia)].value;
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i];
  Node node{Op::kSum, Tensor::scalar(acc)};
  node.a = ia;
  return push(std::move(node));
}

const Tensor& Tape::value(Var v) const { return nodes_[static_cast<size_t>(check(v))].value; }

void Tape::accumulate(int node, const Tensor& g) {
  Tensor& dst = grads_[static_cast<size_t>(node)];
  for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Var loss) {
  int il = check(loss);
  if (nodes_[static_cast<size_t>(il)].value.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                nodes_[static_cast<size_t>(il)].value.shape_string());
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.shape());
  grads_[static_cast<size_t>(il)][0] = 1.0;

  for (int idx = il; idx >= 0; --idx) {
    const Node& n = nodes_[static_cast<size_t>(idx)];
    const Tensor& g = grads_[static_cast<size_t>(idx)];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConstant:
        break;
      case Op::kMatMul: {
        const Tensor& a = nodes_[static_cast<size_t>(n.a)].value;
        const Tensor& b = nodes_[static_cast<size_t>(n.b)].value;
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        Tensor& db = grads_[static_cast<size_t>(n.b)];
        int m = a.dim(0), k = a.dim(1);
        int ncols = b.rank() == 2 ? b.dim(1) : 1;
        // dA += dC * B^T ; dB += A^T * dC
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<size_t>(i) * ncols;
          const double* arow = a.data() + static_cast<size_t>(i) * k;
          for (int p = 0; p < k; ++p) {
            const double* brow = b.data() + static_cast<size_t>(p) * ncols;
            double acc = 0.0;
            for (int j = 0; j < ncols; ++j) {
              acc += grow[j] * brow[j];
              db[static_cast<size_t>(p) * ncols + j] += arow[p] * grow[j];
            }
            da[static_cast<size_t>(i) * k + p] += acc;
          }
        }
        break;
      }
      case Op::kAdd: {
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      }
      case Op::kMul: {
        const Tensor& a = nodes_[static_cast<size_t>(n.a)].value;
        const Tensor& b = nodes_[static_cast<size_t>(n.b)].value;
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        Tensor& db = grads_[static_cast<size_t>(n.b)];
        for (size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i] * b[i];
          db[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        for (size_t i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          da[i] += g[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::kTanh: {
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        for (size_t i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          da[i] += g[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::kConcat: {
        const Tensor& a = nodes_[static_cast<size_t>(n.a)].value;
        const Tensor& b = nodes_[static_cast<size_t>(n.b)].value;
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        Tensor& db = grads_[static_cast<size_t>(n.b)];
        size_t outer, inner;
        axis_strides(n.value.shape(), n.aux0, &outer, &inner);
        size_t a_block = static_cast<size_t>(a.dim(n.aux0)) * inner;
        size_t b_block = static_cast<size_t>(b.dim(n.aux0)) * inner;
        for (size_t o = 0; o < outer; ++o) {
          const double* src = g.data() + o * (a_block + b_block);
          for (size_t i = 0; i < a_block; ++i) da[o * a_block + i] += src[i];
          for (size_t i = 0; i < b_block; ++i) db[o * b_block + i] += src[a_block + i];
        }
        break;
      }
      case Op::kSlice: {
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        for (int i = 0; i < n.aux1; ++i)
          da[static_cast<size_t>(n.aux0 + i)] += g[static_cast<size_t>(i)];
        break;
      }
      case Op::kLookup: {
        Tensor& dt = grads_[static_cast<size_t>(n.a)];
        int d = n.value.dim(0);
        double* dst = dt.data() + static_cast<size_t>(n.aux0) * d;
        for (int i = 0; i < d; ++i) dst[i] += g[static_cast<size_t>(i)];
        break;
      }
      case Op::kSoftmaxXent: {
        Tensor& dl = grads_[static_cast<size_t>(n.a)];
        double go = g[0];
        for (size_t i = 0; i < dl.size(); ++i) dl[i] += go * n.saved[i];
        dl[static_cast<size_t>(n.aux0)] -= go;
        break;
      }
      case Op::kScale: {
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        for (size_t i = 0; i < g.size(); ++i) da[i] += n.factor * g[i];
        break;
      }
      case Op::kSum: {
        Tensor& da = grads_[static_cast<size_t>(n.a)];
        for (size_t i = 0; i < da.size(); ++i) da[i] += g[0];
        break;
      }
    }
  }
}

const Tensor& Tape::grad(Var v) const {
  int i = check(v);
  if (grads_.size() != nodes_.size())
    throw std::logic_error("grad: backward has not run on this tape");
  return grads_[static_cast<size_t>(i)];
}

}  // namespace sentigen
