// SPDX-License-Identifier: Apache-2.0
#include "snet/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace snet {

MatrixD widen(const Matrix& m) {
  MatrixD out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = static_cast<double>(m.data[i]);
  return out;
}

Matrix narrow(const MatrixD& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = static_cast<float>(m.data[i]);
  return out;
}

GradMap zero_grads_like(const NamedParams& params) {
  GradMap grads;
  for (const auto& [name, mat] : params) grads.emplace(name, MatrixD(mat->rows, mat->cols));
  return grads;
}

MatrixD& grad_slot(GradMap& grads, const std::string& name, std::size_t rows, std::size_t cols) {
  auto it = grads.find(name);
  if (it == grads.end()) it = grads.emplace(name, MatrixD(rows, cols)).first;
  return it->second;
}

std::uint64_t RngState::next_u64() {
  ++position;
  std::uint64_t z = seed + position * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double RngState::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngState::index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngState::index: n must be positive");
  return next_u64() % n;
}

Matrix elementwise(const Matrix& m, Unary fn) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = static_cast<double>(m.data[i]);
    out.data[i] = static_cast<float>(fn == Unary::Tanh ? std::tanh(x) : sigmoid(x));
  }
  return out;
}

namespace {

template <typename T>
Mat<T> softmax_rows_impl(const Mat<T>& m) {
  if (m.empty()) throw std::invalid_argument("softmax_rows: matrix must have at least one row and column");
  Mat<T> out(m.rows, m.cols);
  std::vector<double> buf(m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const T* src = m.row_ptr(i);
    double mx = static_cast<double>(src[0]);
    for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, static_cast<double>(src[j]));
    if (!std::isfinite(mx)) throw std::invalid_argument("softmax_rows: non-finite input");
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double e = std::exp(static_cast<double>(src[j]) - mx);
      buf[j] = e;
      sum += e;
    }
    T* dst = out.row_ptr(i);
    for (std::size_t j = 0; j < m.cols; ++j) dst[j] = static_cast<T>(buf[j] / sum);
  }
  return out;
}

}  // namespace

Matrix softmax_rows(const Matrix& m) {
  check_finite(m, "softmax_rows input");
  return softmax_rows_impl(m);
}

MatrixD softmax_rows(const MatrixD& m) { return softmax_rows_impl(m); }

Matrix init_uniform_xavier(std::size_t rows, std::size_t cols, RngState& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("init_uniform_xavier: zero dimension");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = static_cast<float>(rng.uniform(-bound, bound));
  return out;
}

void check_finite(const Matrix& m, const std::string& what) {
  for (float v : m.data)
    if (!std::isfinite(v)) throw std::invalid_argument(what + ": non-finite entry");
}

void matvec_acc(const double* x, const Matrix& w, double* acc) {
  for (std::size_t k = 0; k < w.rows; ++k) {
    const double xv = x[k];
    const float* wrow = w.row_ptr(k);
    for (std::size_t j = 0; j < w.cols; ++j) acc[j] += xv * static_cast<double>(wrow[j]);
  }
}

void matvec_transposed_acc(const double* dy, const Matrix& w, double* dx) {
  for (std::size_t k = 0; k < w.rows; ++k) {
    const float* wrow = w.row_ptr(k);
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) s += dy[j] * static_cast<double>(wrow[j]);
    dx[k] += s;
  }
}

void outer_acc(const double* x, std::size_t m, const double* dy, std::size_t n, MatrixD& dw) {
  for (std::size_t k = 0; k < m; ++k) {
    const double xv = x[k];
    if (xv == 0.0) continue;
    double* drow = dw.row_ptr(k);
    for (std::size_t j = 0; j < n; ++j) drow[j] += xv * dy[j];
  }
}

std::vector<GradCheckReport> finite_diff_check(const std::function<double()>& loss_fn,
                                               const NamedParams& params,
                                               const GradMap& analytic_grads,
                                               double epsilon, double tolerance) {
  if (epsilon < 1e-5 || epsilon > 1e-2)
    throw std::invalid_argument("finite_diff_check: epsilon must be in [1e-5, 1e-2]");
  const double l0 = loss_fn();
  const double l1 = loss_fn();
  if (l0 != l1)
    throw std::invalid_argument("finite_diff_check: loss_fn is not deterministic (is dropout disabled?)");

  std::vector<GradCheckReport> reports;
  reports.reserve(params.size());
  for (const auto& [name, mat] : params) {
    auto it = analytic_grads.find(name);
    if (it == analytic_grads.end())
      throw std::invalid_argument("finite_diff_check: missing analytic gradient for " + name);
    const MatrixD& grad = it->second;
    if (grad.rows != mat->rows || grad.cols != mat->cols)
      throw std::invalid_argument("finite_diff_check: gradient shape mismatch for " + name);

    GradCheckReport report{name, 0.0, tolerance, true};
    for (std::size_t i = 0; i < mat->size(); ++i) {
      const float saved = mat->data[i];
      const float plus = static_cast<float>(static_cast<double>(saved) + epsilon);
      const float minus = static_cast<float>(static_cast<double>(saved) - epsilon);
      mat->data[i] = plus;
      const double lp = loss_fn();
      mat->data[i] = minus;
      const double lm = loss_fn();
      mat->data[i] = saved;
      // Use the realised float perturbation, not the nominal epsilon.
      const double denom = static_cast<double>(plus) - static_cast<double>(minus);
      const double numeric = (lp - lm) / denom;
      const double analytic = grad.data[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    report.passed = report.max_rel_error <= tolerance;
    reports.push_back(std::move(report));
  }
  return reports;
}

bool all_passed(const std::vector<GradCheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed) return false;
  return true;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace snet
