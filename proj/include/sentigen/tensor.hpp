#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentigen {

// Dense row-major tensor of doubles. All model math runs in 64-bit; this is
// what makes the finite-difference checks and the bit-level invariants hold.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)), values_(checked_size(shape_), 0.0) {}

  Tensor(std::vector<int> shape, std::vector<double> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != checked_size(shape_))
      throw std::invalid_argument("tensor: values do not fill shape " + shape_string());
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor vector(std::initializer_list<double> vs) {
    return Tensor({static_cast<int>(vs.size())}, std::vector<double>(vs));
  }

  // rows x cols from row-major data
  static Tensor matrix(int rows, int cols, std::vector<double> vs) {
    return Tensor({rows, cols}, std::move(vs));
  }

  static Tensor identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.values_[static_cast<size_t>(i) * n + i] = 1.0;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }

  double& at2(int r, int c) { return values_[static_cast<size_t>(r) * dim(1) + c]; }
  double at2(int r, int c) const { return values_[static_cast<size_t>(r) * dim(1) + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v) { values_.assign(values_.size(), v); }

  std::string shape_string() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  static size_t checked_size(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      // zero-length axes are legal so that empty operands concat cleanly
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<double> values_;
};

// Deterministic splitmix64 generator. Not std::mt19937 so that streams are
// identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // in [0, n)
  size_t next_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent stream, e.g. one per epoch.
  Rng fork(uint64_t tag) const {
    Rng r(state_ ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL));
    r.next_u64();
    return r;
  }

 private:
  uint64_t state_;
};

}  // namespace sentigen
