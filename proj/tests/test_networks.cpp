// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "snet/networks.hpp"

using namespace snet;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, RngState& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = static_cast<float>(rng.uniform(lo, hi));
  return m;
}

// Brute-force penalization oracle, independent of the library routine:
// builds G = A A^T - I explicitly and sums squares.
double penalization_oracle(const Matrix& a) {
  const std::size_t r = a.rows;
  std::vector<std::vector<double>> gram(r, std::vector<double>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t k = 0; k < a.cols; ++k)
        gram[i][j] += static_cast<double>(a(i, k)) * static_cast<double>(a(j, k));
      if (i == j) gram[i][j] -= 1.0;
    }
  double sum = 0.0;
  for (const auto& row : gram)
    for (double g : row) sum += g * g;
  return sum;
}

}  // namespace

TEST_CASE("all-zero LSTM weights collapse every hidden state to zero") {
  RngState rng(1);
  LstmStack stack(LstmStackConfig{2, 3, 4, 0.0}, rng);
  for (auto& layer : stack.layers())
    for (Matrix* m : {&layer.w_i, &layer.w_f, &layer.w_g, &layer.w_o, &layer.u_i, &layer.u_f,
                      &layer.u_g, &layer.u_o, &layer.b_i, &layer.b_f, &layer.b_g, &layer.b_o})
      m->zero();
  MatrixD input(5, 3);
  for (std::size_t i = 0; i < input.size(); ++i) input.data[i] = 0.3 * static_cast<double>(i);
  RngState fr(2);
  MatrixD top = stack.forward(input, false, fr, nullptr);
  for (double v : top.data) CHECK(v == 0.0);
}

TEST_CASE("LSTM carries state across timesteps") {
  RngState rng(3);
  LstmStack stack(LstmStackConfig{1, 2, 3, 0.0}, rng);
  MatrixD one(1, 2);
  one(0, 0) = 0.7;
  one(0, 1) = -0.4;
  MatrixD two(2, 2);  // same first input, all-zero second step
  two(0, 0) = 0.7;
  two(0, 1) = -0.4;
  RngState fr(4);
  MatrixD h1 = stack.forward(one, false, fr, nullptr);
  MatrixD h2 = stack.forward(two, false, fr, nullptr);
  bool differs = false;
  for (std::size_t j = 0; j < 3; ++j)
    if (h2(1, j) != h1(0, j)) differs = true;
  CHECK(differs);
}

TEST_CASE("LSTM rejects shape mismatches and stale caches") {
  RngState rng(5);
  LstmStack stack(LstmStackConfig{1, 4, 3, 0.0}, rng);
  RngState fr(6);
  CHECK_THROWS_AS(stack.forward(MatrixD(2, 5), false, fr, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(stack.forward(MatrixD(0, 4), false, fr, nullptr), std::invalid_argument);
  LstmStackCache never_filled;
  GradMap grads;
  CHECK_THROWS_AS(stack.backward(never_filled, MatrixD(2, 3), "l.", grads), std::logic_error);
}

TEST_CASE("baseline classifier gradients match finite differences") {
  RngState rng(7);
  BaselineClassifier model(BaselineConfig{2, 8, 4, 0.5}, rng);
  Matrix input = random_matrix(4, 8, rng);
  const double target = 1.0;

  auto loss = [&] {
    RngState unused(0);
    const double p = model.forward(input, false, unused, nullptr);
    return (p - target) * (p - target);
  };

  NamedParams params = model.named_params();
  GradMap grads = zero_grads_like(params);
  BaselineCache cache;
  RngState unused(0);
  const double p = model.forward(input, false, unused, &cache);
  model.backward(cache, 2.0 * (p - target), grads);

  auto reports = finite_diff_check(loss, params, grads, 1e-4, 1e-3);
  CHECK(reports.size() == params.size());
  for (const auto& r : reports) {
    INFO(r.parameter, " rel err ", r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("bilstm palindrome symmetry with mirrored weights") {
  RngState rng(8);
  BiLstmEncoder enc(LstmStackConfig{2, 3, 4, 0.0}, rng);
  enc.backward_stack() = enc.forward_stack();  // mirror

  MatrixD input(5, 3);
  for (std::size_t t = 0; t < 5; ++t) {
    const std::size_t mirror = 4 - t;
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = 0.1 * static_cast<double>(std::min(t, mirror) + 1) * (j + 1);
      input(t, j) = v;
    }
  }
  RngState fr(9);
  MatrixD h = enc.forward(input, false, fr, nullptr);
  REQUIRE(h.rows == 5);
  REQUIRE(h.cols == 8);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 4; ++j) CHECK(h(t, j) == h(4 - t, 4 + j));
}

TEST_CASE("bilstm n=1 produces one row of width 2u") {
  RngState rng(10);
  BiLstmEncoder enc(LstmStackConfig{8, 6, 32, 0.0}, rng);
  MatrixD input(1, 6);
  input(0, 2) = 0.5;
  RngState fr(11);
  MatrixD h = enc.forward(input, false, fr, nullptr);
  CHECK(h.rows == 1);
  CHECK(h.cols == 64);
}

TEST_CASE("bilstm gradients match finite differences") {
  RngState rng(12);
  BiLstmEncoder enc(LstmStackConfig{2, 3, 4, 0.5}, rng);
  MatrixD input(4, 3);
  RngState ir(13);
  for (auto& v : input.data) v = ir.uniform(-1.0, 1.0);
  // Fixed random projection of H to a scalar keeps the loss smooth and dense.
  MatrixD probe(4, 8);
  for (auto& v : probe.data) v = ir.uniform(-1.0, 1.0);

  NamedParams params;
  enc.collect_params("bilstm.", params);

  auto loss = [&] {
    RngState unused(0);
    const MatrixD h = enc.forward(input, false, unused, nullptr);
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += h.data[i] * probe.data[i];
    return s;
  };

  GradMap grads = zero_grads_like(params);
  BiLstmCache cache;
  RngState unused(0);
  enc.forward(input, false, unused, &cache);
  enc.backward(cache, probe, "bilstm.", grads);

  auto reports = finite_diff_check(loss, params, grads, 1e-4, 1e-3);
  for (const auto& r : reports) {
    INFO(r.parameter, " rel err ", r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("self-attention shapes at the published dimensions") {
  RngState rng(14);
  AttentionParams params{random_matrix(150, 64, rng, -0.1, 0.1),
                         random_matrix(20, 150, rng, -0.1, 0.1)};
  Matrix h = random_matrix(10, 64, rng);
  AttentionBundle bundle = self_attention(params, h);
  CHECK(bundle.hidden_attention.rows == 150);
  CHECK(bundle.hidden_attention.cols == 10);
  CHECK(bundle.attention.rows == 20);
  CHECK(bundle.attention.cols == 10);
  CHECK(bundle.sentence_embedding.rows == 20);
  CHECK(bundle.sentence_embedding.cols == 64);
  for (std::size_t i = 0; i < 20; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 10; ++j) sum += bundle.attention(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-5);
  }
}

TEST_CASE("self-attention over a single token is a point mass") {
  RngState rng(15);
  AttentionParams params{random_matrix(6, 8, rng), random_matrix(3, 6, rng)};
  Matrix h = random_matrix(1, 8, rng);
  AttentionBundle bundle = self_attention(params, h);
  for (std::size_t i = 0; i < 3; ++i) CHECK(bundle.attention(i, 0) == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(bundle.sentence_embedding(i, j) == doctest::Approx(h(0, j)).epsilon(1e-6));
}

TEST_CASE("zero W_s2 gives uniform attention and column-mean embeddings") {
  RngState rng(16);
  AttentionParams params{random_matrix(6, 8, rng), Matrix(3, 6)};
  Matrix h = random_matrix(5, 8, rng);
  AttentionBundle bundle = self_attention(params, h);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(bundle.attention(i, j) == doctest::Approx(0.2).epsilon(1e-6));
  for (std::size_t j = 0; j < 8; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 5; ++t) mean += h(t, j);
    mean /= 5.0;
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(bundle.sentence_embedding(i, j) == doctest::Approx(mean).epsilon(1e-5));
  }
}

TEST_CASE("self-attention rejects width mismatches") {
  RngState rng(17);
  AttentionParams params{random_matrix(6, 8, rng), random_matrix(3, 6, rng)};
  CHECK_THROWS_AS(self_attention(params, random_matrix(5, 10, rng)), std::invalid_argument);
}

TEST_CASE("penalization on constructed attention matrices") {
  // Orthonormal rows: one-hot on distinct positions.
  Matrix ortho(2, 3);
  ortho(0, 0) = 1.0f;
  ortho(1, 2) = 1.0f;
  CHECK(penalization(ortho) <= 1e-6);
  CHECK(penalization_oracle(ortho) <= 1e-6);

  // Both rows the same one-hot: A A^T is all ones, P = 2.
  Matrix same(2, 3);
  same(0, 1) = 1.0f;
  same(1, 1) = 1.0f;
  CHECK(penalization(same) == doctest::Approx(2.0));
  CHECK(penalization_oracle(same) == doctest::Approx(2.0));

  // Uniform 2x2 rows: A A^T = [[.5,.5],[.5,.5]], so G has four +/-0.5 entries
  // and P = 4 * 0.25 = 1.
  Matrix uniform(2, 2, 0.5f);
  CHECK(penalization_oracle(uniform) == doctest::Approx(1.0));
  CHECK(penalization(uniform) == doctest::Approx(penalization_oracle(uniform)));

  CHECK(penalization(uniform) >= 0.0);
}

TEST_CASE("penalization is zero iff rows are orthonormal") {
  // Forward direction is covered above; here a near-orthonormal perturbation
  // must produce strictly positive P.
  Matrix a(2, 4);
  a(0, 0) = 1.0f;
  a(1, 2) = 0.9f;
  a(1, 3) = 0.1f;  // row not unit norm
  CHECK(penalization(a) > 1e-6);

  RngState rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix z = random_matrix(3, 6, rng, -2.0, 2.0);
    Matrix rows = softmax_rows(z);  // row-stochastic, generally not orthonormal
    CHECK(penalization(rows) == doctest::Approx(penalization_oracle(rows)).epsilon(1e-9));
  }
}

TEST_CASE("classifier heads: zero weights give 0.5, bias saturates") {
  RngState rng(19);
  BaselineClassifier model(BaselineConfig{1, 4, 3, 0.0}, rng);
  model.head().weight.zero();
  model.head().bias.zero();
  Matrix input = random_matrix(2, 4, rng);
  RngState unused(0);
  CHECK(model.forward(input, false, unused, nullptr) == doctest::Approx(0.5));

  model.head().bias(0, 0) = 10.0f;
  CHECK(model.forward(input, false, unused, nullptr) > 0.9999);
}

TEST_CASE("attention classifier forward/backward gradients match finite differences") {
  RngState rng(20);
  AttentionNetConfig cfg{2, 5, 4, 6, 3, 10, 0.5};
  AttentionClassifier model(cfg, rng);
  Matrix input = random_matrix(5, 5, rng);
  const double target = 0.0;

  auto loss = [&] {
    RngState unused(0);
    const double p = model.forward(input, false, unused, nullptr);
    return (p - target) * (p - target);
  };

  NamedParams params = model.named_params();
  GradMap grads = zero_grads_like(params);
  AttentionNetCache cache;
  RngState unused(0);
  const double p = model.forward(input, false, unused, &cache);
  model.backward(cache, 2.0 * (p - target), 0.0, grads);

  auto reports = finite_diff_check(loss, params, grads, 1e-4, 1e-3);
  for (const auto& r : reports) {
    INFO(r.parameter, " rel err ", r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("penalization-only loss: gradient check and dead heads") {
  RngState rng(21);
  AttentionNetConfig cfg{1, 4, 3, 5, 3, 6, 0.0};
  AttentionClassifier model(cfg, rng);
  Matrix input = random_matrix(3, 4, rng);  // n == r
  const double coeff = 0.6;

  auto loss = [&] {
    RngState unused(0);
    AttentionNetCache cache;
    model.forward(input, false, unused, &cache);
    return coeff * penalization(cache.attn.a);
  };

  NamedParams params = model.named_params();
  GradMap grads = zero_grads_like(params);
  AttentionNetCache cache;
  RngState unused(0);
  model.forward(input, false, unused, &cache);
  model.backward(cache, 0.0, coeff, grads);

  // The loss never touches the fc/out heads: their gradients are exactly zero.
  for (const auto& name : {"fc.weight", "fc.bias", "out.weight", "out.bias"})
    for (double g : grads.at(name).data) CHECK(g == 0.0);

  auto reports = finite_diff_check(loss, params, grads, 1e-4, 1e-3);
  for (const auto& r : reports) {
    INFO(r.parameter, " rel err ", r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("eval-mode forwards are deterministic and dropout-free") {
  RngState rng(22);
  AttentionNetConfig cfg{2, 4, 3, 5, 2, 6, 0.5};
  AttentionClassifier model(cfg, rng);
  Matrix input = random_matrix(4, 4, rng);

  RngState r1(1), r2(99);
  const double p1 = model.forward(input, false, r1, nullptr);
  const double p2 = model.forward(input, false, r2, nullptr);
  CHECK(p1 == p2);
  CHECK(r1.position == 0);  // eval consumes no randomness

  // Train mode with dropout 0 equals eval mode.
  AttentionNetConfig no_drop = cfg;
  no_drop.dropout = 0.0;
  RngState rng_b(22);
  AttentionClassifier clone(no_drop, rng_b);  // same init sequence
  RngState r3(5);
  CHECK(clone.forward(input, true, r3, nullptr) == p1);
}

TEST_CASE("train-mode dropout preserves expected activations via inverted scaling") {
  RngState rng(23);
  BaselineClassifier model(BaselineConfig{1, 3, 4, 0.5}, rng);
  Matrix input = random_matrix(2, 3, rng);
  RngState unused(0);
  BaselineCache eval_cache;
  model.forward(input, false, unused, &eval_cache);

  // Average the dropped final state over many masks; it should approach the
  // eval-mode final state.
  std::vector<double> mean(4, 0.0);
  RngState mask_rng(77);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    BaselineCache c;
    model.forward(input, true, mask_rng, &c);
    for (std::size_t j = 0; j < 4; ++j) mean[j] += c.dropped[j];
  }
  for (std::size_t j = 0; j < 4; ++j) {
    mean[j] /= trials;
    CHECK(std::abs(mean[j] - eval_cache.dropped[j]) < 0.02);
  }
}

TEST_CASE("eval outputs are independent of batch-order context") {
  RngState rng(24);
  BaselineClassifier model(BaselineConfig{2, 3, 4, 0.5}, rng);
  Matrix a = random_matrix(3, 3, rng);
  Matrix b = random_matrix(2, 3, rng);
  RngState unused(0);
  const double pa = model.forward(a, false, unused, nullptr);
  const double pb = model.forward(b, false, unused, nullptr);
  // Reversed order gives bitwise-identical probabilities.
  const double pb2 = model.forward(b, false, unused, nullptr);
  const double pa2 = model.forward(a, false, unused, nullptr);
  CHECK(pa == pa2);
  CHECK(pb == pb2);
}
