// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace snet {

// Row-major dense matrix. float is the storage type used for parameters,
// embeddings and checkpoint tensors; reductions and all network math
// accumulate in double (MatrixD) so finite-difference checks stay tight.
template <typename T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, T init = T(0)) : rows(r), cols(c), data(r * c, init) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  T* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const T* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return rows == 0 || cols == 0; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }
};

using Matrix = Mat<float>;
using MatrixD = Mat<double>;

MatrixD widen(const Matrix& m);
Matrix narrow(const MatrixD& m);

// Parameter registry: (name, storage) pairs in registration order. The order
// fixes iteration everywhere it matters (Adam, checkpoints, grad checks).
using NamedParams = std::vector<std::pair<std::string, Matrix*>>;

// Gradients are transient, so they stay in double end to end.
using GradMap = std::map<std::string, MatrixD>;

GradMap zero_grads_like(const NamedParams& params);
MatrixD& grad_slot(GradMap& grads, const std::string& name, std::size_t rows, std::size_t cols);

// Counter-based RNG (splitmix64 over seed and position). Identical seed and
// call sequence give identical streams; the state is a plain value, so it can
// be copied to replay a sequence.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t position = 0;

  RngState() = default;
  explicit RngState(std::uint64_t s) : seed(s) {}

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  std::uint64_t index(std::uint64_t n);  // [0, n), n > 0

  template <typename V>
  void shuffle(std::vector<V>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(index(i + 1));
      std::swap(v[i], v[j]);
    }
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Unary { Tanh, Sigmoid };

// Shape-preserving tanh/sigmoid.
Matrix elementwise(const Matrix& m, Unary fn);

// Row-wise softmax with max subtraction; every output row sums to 1.
Matrix softmax_rows(const Matrix& m);
MatrixD softmax_rows(const MatrixD& m);

// Uniform on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
Matrix init_uniform_xavier(std::size_t rows, std::size_t cols, RngState& rng);

// Throws std::invalid_argument naming `what` if any entry is NaN/Inf.
void check_finite(const Matrix& m, const std::string& what);

// Double-accumulating kernels over float-stored weights.
// acc(1xN) += x(1xM) . w(MxN)
void matvec_acc(const double* x, const Matrix& w, double* acc);
// dx(1xM) += dy(1xN) . w(MxN)^T
void matvec_transposed_acc(const double* dy, const Matrix& w, double* dx);
// dw(MxN) += x(1xM)^T . dy(1xN)
void outer_acc(const double* x, std::size_t m, const double* dy, std::size_t n, MatrixD& dw);

template <typename A, typename B>
MatrixD matmul(const Mat<A>& a, const Mat<B>& b) {
  MatrixD out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* dst = out.row_ptr(i);
    const A* arow = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = static_cast<double>(arow[k]);
      const B* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) dst[j] += av * static_cast<double>(brow[j]);
    }
  }
  return out;
}

template <typename T>
Mat<T> transpose(const Mat<T>& m) {
  Mat<T> out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

struct GradCheckReport {
  std::string parameter;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Central-difference check of analytic gradients, one report per parameter.
// loss_fn must be deterministic (dropout disabled); this is verified by
// evaluating it twice up front. Perturbations happen in place through the
// NamedParams pointers and are restored afterwards.
std::vector<GradCheckReport> finite_diff_check(const std::function<double()>& loss_fn,
                                               const NamedParams& params,
                                               const GradMap& analytic_grads,
                                               double epsilon, double tolerance);

bool all_passed(const std::vector<GradCheckReport>& reports);

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 14695981039346656037ull);

}  // namespace snet
