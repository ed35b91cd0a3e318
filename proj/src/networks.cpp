// SPDX-License-Identifier: Apache-2.0
#include "snet/networks.hpp"

#include <cmath>
#include <stdexcept>

namespace snet {

namespace {

void check_sequence(const MatrixD& input, std::size_t expected_width, const char* who) {
  if (input.rows == 0) throw std::invalid_argument(std::string(who) + ": empty sequence");
  if (input.cols != expected_width)
    throw std::invalid_argument(std::string(who) + ": input width " + std::to_string(input.cols) +
                                " does not match configured " + std::to_string(expected_width));
}

std::string layer_prefix(const std::string& prefix, std::size_t layer) {
  return prefix + "l" + std::to_string(layer) + ".";
}

void add_into(MatrixD& dst, const MatrixD& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

MatrixD reverse_rows(const MatrixD& m) {
  MatrixD out(m.rows, m.cols);
  for (std::size_t t = 0; t < m.rows; ++t) {
    const double* src = m.row_ptr(m.rows - 1 - t);
    std::copy(src, src + m.cols, out.row_ptr(t));
  }
  return out;
}

LstmStack::LstmStack(const LstmStackConfig& cfg, RngState& rng) : cfg_(cfg) {
  if (cfg.layers == 0 || cfg.input_size == 0 || cfg.hidden_size == 0)
    throw std::invalid_argument("LstmStack: layers, input and hidden size must be positive");
  layers_.reserve(cfg.layers);
  const std::size_t h = cfg.hidden_size;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = l == 0 ? cfg.input_size : h;
    LstmLayerParams p;
    p.w_i = init_uniform_xavier(in, h, rng);
    p.w_f = init_uniform_xavier(in, h, rng);
    p.w_g = init_uniform_xavier(in, h, rng);
    p.w_o = init_uniform_xavier(in, h, rng);
    p.u_i = init_uniform_xavier(h, h, rng);
    p.u_f = init_uniform_xavier(h, h, rng);
    p.u_g = init_uniform_xavier(h, h, rng);
    p.u_o = init_uniform_xavier(h, h, rng);
    p.b_i = Matrix(1, h);
    p.b_f = Matrix(1, h);
    p.b_g = Matrix(1, h);
    p.b_o = Matrix(1, h);
    layers_.push_back(std::move(p));
  }
}

void LstmStack::collect_params(const std::string& prefix, NamedParams& out) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string lp = layer_prefix(prefix, l);
    LstmLayerParams& p = layers_[l];
    out.emplace_back(lp + "w_i", &p.w_i);
    out.emplace_back(lp + "w_f", &p.w_f);
    out.emplace_back(lp + "w_g", &p.w_g);
    out.emplace_back(lp + "w_o", &p.w_o);
    out.emplace_back(lp + "u_i", &p.u_i);
    out.emplace_back(lp + "u_f", &p.u_f);
    out.emplace_back(lp + "u_g", &p.u_g);
    out.emplace_back(lp + "u_o", &p.u_o);
    out.emplace_back(lp + "b_i", &p.b_i);
    out.emplace_back(lp + "b_f", &p.b_f);
    out.emplace_back(lp + "b_g", &p.b_g);
    out.emplace_back(lp + "b_o", &p.b_o);
  }
}

MatrixD LstmStack::forward(const MatrixD& input, bool train, RngState& rng,
                           LstmStackCache* cache) const {
  check_sequence(input, cfg_.input_size, "lstm_forward");
  const std::size_t n = input.rows;
  const std::size_t h = cfg_.hidden_size;
  const std::size_t num_layers = layers_.size();

  LstmStackCache local;
  LstmStackCache& c = cache ? *cache : local;
  c = LstmStackCache{};
  c.steps = n;
  c.train = train;
  c.inputs.resize(num_layers);
  c.gate_i.assign(num_layers, MatrixD(n, h));
  c.gate_f.assign(num_layers, MatrixD(n, h));
  c.gate_g.assign(num_layers, MatrixD(n, h));
  c.gate_o.assign(num_layers, MatrixD(n, h));
  c.cell.assign(num_layers, MatrixD(n, h));
  c.hidden.assign(num_layers, MatrixD(n, h));
  if (num_layers > 1) c.drop_mask.assign(num_layers - 1, MatrixD());

  const bool use_dropout = train && cfg_.interlayer_dropout > 0.0;
  const double p = cfg_.interlayer_dropout;
  const double scale = use_dropout ? 1.0 / (1.0 - p) : 1.0;

  std::vector<double> a_i(h), a_f(h), a_g(h), a_o(h), h_prev(h), c_prev(h);

  for (std::size_t l = 0; l < num_layers; ++l) {
    if (l == 0) {
      c.inputs[l] = input;
    } else if (use_dropout) {
      MatrixD mask(n, h);
      MatrixD dropped(n, h);
      const MatrixD& below = c.hidden[l - 1];
      for (std::size_t i = 0; i < mask.size(); ++i) {
        const double keep = rng.uniform() >= p ? scale : 0.0;
        mask.data[i] = keep;
        dropped.data[i] = below.data[i] * keep;
      }
      c.drop_mask[l - 1] = std::move(mask);
      c.inputs[l] = std::move(dropped);
    } else {
      c.inputs[l] = c.hidden[l - 1];
    }

    const LstmLayerParams& P = layers_[l];
    const MatrixD& x = c.inputs[l];
    std::fill(h_prev.begin(), h_prev.end(), 0.0);
    std::fill(c_prev.begin(), c_prev.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double* xt = x.row_ptr(t);
      for (std::size_t j = 0; j < h; ++j) {
        a_i[j] = static_cast<double>(P.b_i.data[j]);
        a_f[j] = static_cast<double>(P.b_f.data[j]);
        a_g[j] = static_cast<double>(P.b_g.data[j]);
        a_o[j] = static_cast<double>(P.b_o.data[j]);
      }
      matvec_acc(xt, P.w_i, a_i.data());
      matvec_acc(xt, P.w_f, a_f.data());
      matvec_acc(xt, P.w_g, a_g.data());
      matvec_acc(xt, P.w_o, a_o.data());
      matvec_acc(h_prev.data(), P.u_i, a_i.data());
      matvec_acc(h_prev.data(), P.u_f, a_f.data());
      matvec_acc(h_prev.data(), P.u_g, a_g.data());
      matvec_acc(h_prev.data(), P.u_o, a_o.data());

      double* gi = c.gate_i[l].row_ptr(t);
      double* gf = c.gate_f[l].row_ptr(t);
      double* gg = c.gate_g[l].row_ptr(t);
      double* go = c.gate_o[l].row_ptr(t);
      double* ct = c.cell[l].row_ptr(t);
      double* ht = c.hidden[l].row_ptr(t);
      for (std::size_t j = 0; j < h; ++j) {
        gi[j] = sigmoid(a_i[j]);
        gf[j] = sigmoid(a_f[j]);
        gg[j] = std::tanh(a_g[j]);
        go[j] = sigmoid(a_o[j]);
        ct[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        ht[j] = go[j] * std::tanh(ct[j]);
        h_prev[j] = ht[j];
        c_prev[j] = ct[j];
      }
    }
  }
  return c.hidden[num_layers - 1];
}

MatrixD LstmStack::backward(const LstmStackCache& c, const MatrixD& d_top,
                            const std::string& prefix, GradMap& grads) const {
  if (c.hidden.size() != layers_.size() || c.steps == 0)
    throw std::logic_error("lstm backward: stale or missing forward cache");
  const std::size_t n = c.steps;
  const std::size_t h = cfg_.hidden_size;
  if (d_top.rows != n || d_top.cols != h)
    throw std::invalid_argument("lstm backward: upstream gradient shape mismatch");

  MatrixD d_out = d_top;
  std::vector<double> dh(h), dh_carry(h), dc_carry(h), da_i(h), da_f(h), da_g(h), da_o(h);

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LstmLayerParams& P = layers_[li];
    const std::size_t in_size = li == 0 ? cfg_.input_size : h;
    const std::string lp = layer_prefix(prefix, li);
    MatrixD& dw_i = grad_slot(grads, lp + "w_i", in_size, h);
    MatrixD& dw_f = grad_slot(grads, lp + "w_f", in_size, h);
    MatrixD& dw_g = grad_slot(grads, lp + "w_g", in_size, h);
    MatrixD& dw_o = grad_slot(grads, lp + "w_o", in_size, h);
    MatrixD& du_i = grad_slot(grads, lp + "u_i", h, h);
    MatrixD& du_f = grad_slot(grads, lp + "u_f", h, h);
    MatrixD& du_g = grad_slot(grads, lp + "u_g", h, h);
    MatrixD& du_o = grad_slot(grads, lp + "u_o", h, h);
    MatrixD& db_i = grad_slot(grads, lp + "b_i", 1, h);
    MatrixD& db_f = grad_slot(grads, lp + "b_f", 1, h);
    MatrixD& db_g = grad_slot(grads, lp + "b_g", 1, h);
    MatrixD& db_o = grad_slot(grads, lp + "b_o", 1, h);

    MatrixD d_in(n, in_size);
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    std::fill(dc_carry.begin(), dc_carry.end(), 0.0);

    for (std::size_t t = n; t-- > 0;) {
      const double* gi = c.gate_i[li].row_ptr(t);
      const double* gf = c.gate_f[li].row_ptr(t);
      const double* gg = c.gate_g[li].row_ptr(t);
      const double* go = c.gate_o[li].row_ptr(t);
      const double* ct = c.cell[li].row_ptr(t);
      const double* c_prev = t > 0 ? c.cell[li].row_ptr(t - 1) : nullptr;
      const double* h_prev = t > 0 ? c.hidden[li].row_ptr(t - 1) : nullptr;
      const double* xt = c.inputs[li].row_ptr(t);
      const double* up = d_out.row_ptr(t);

      for (std::size_t j = 0; j < h; ++j) {
        dh[j] = up[j] + dh_carry[j];
        const double tc = std::tanh(ct[j]);
        const double d_o = dh[j] * tc;
        const double dc = dc_carry[j] + dh[j] * go[j] * (1.0 - tc * tc);
        const double di = dc * gg[j];
        const double dg = dc * gi[j];
        const double df = t > 0 ? dc * c_prev[j] : 0.0;
        dc_carry[j] = dc * gf[j];
        da_i[j] = di * gi[j] * (1.0 - gi[j]);
        da_f[j] = df * gf[j] * (1.0 - gf[j]);
        da_o[j] = d_o * go[j] * (1.0 - go[j]);
        da_g[j] = dg * (1.0 - gg[j] * gg[j]);
      }

      outer_acc(xt, in_size, da_i.data(), h, dw_i);
      outer_acc(xt, in_size, da_f.data(), h, dw_f);
      outer_acc(xt, in_size, da_g.data(), h, dw_g);
      outer_acc(xt, in_size, da_o.data(), h, dw_o);
      if (t > 0) {
        outer_acc(h_prev, h, da_i.data(), h, du_i);
        outer_acc(h_prev, h, da_f.data(), h, du_f);
        outer_acc(h_prev, h, da_g.data(), h, du_g);
        outer_acc(h_prev, h, da_o.data(), h, du_o);
      }
      for (std::size_t j = 0; j < h; ++j) {
        db_i.data[j] += da_i[j];
        db_f.data[j] += da_f[j];
        db_g.data[j] += da_g[j];
        db_o.data[j] += da_o[j];
      }

      double* din_t = d_in.row_ptr(t);
      matvec_transposed_acc(da_i.data(), P.w_i, din_t);
      matvec_transposed_acc(da_f.data(), P.w_f, din_t);
      matvec_transposed_acc(da_g.data(), P.w_g, din_t);
      matvec_transposed_acc(da_o.data(), P.w_o, din_t);

      std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
      matvec_transposed_acc(da_i.data(), P.u_i, dh_carry.data());
      matvec_transposed_acc(da_f.data(), P.u_f, dh_carry.data());
      matvec_transposed_acc(da_g.data(), P.u_g, dh_carry.data());
      matvec_transposed_acc(da_o.data(), P.u_o, dh_carry.data());
    }

    if (li == 0) return d_in;
    if (c.train && cfg_.interlayer_dropout > 0.0) {
      const MatrixD& mask = c.drop_mask[li - 1];
      for (std::size_t i = 0; i < d_in.size(); ++i) d_in.data[i] *= mask.data[i];
    }
    d_out = std::move(d_in);
  }
  return {};  // unreachable
}

BiLstmEncoder::BiLstmEncoder(const LstmStackConfig& per_direction, RngState& rng)
    : cfg_(per_direction), fwd_(per_direction, rng), bwd_(per_direction, rng) {}

void BiLstmEncoder::collect_params(const std::string& prefix, NamedParams& out) {
  fwd_.collect_params(prefix + "fwd.", out);
  bwd_.collect_params(prefix + "bwd.", out);
}

MatrixD BiLstmEncoder::forward(const MatrixD& input, bool train, RngState& rng,
                               BiLstmCache* cache) const {
  BiLstmCache local;
  BiLstmCache& c = cache ? *cache : local;
  c.steps = input.rows;
  const MatrixD top_f = fwd_.forward(input, train, rng, &c.fwd);
  const MatrixD top_b_rev = bwd_.forward(reverse_rows(input), train, rng, &c.bwd);
  const std::size_t n = input.rows;
  const std::size_t u = cfg_.hidden_size;
  MatrixD h(n, 2 * u);
  for (std::size_t t = 0; t < n; ++t) {
    const double* f = top_f.row_ptr(t);
    const double* b = top_b_rev.row_ptr(n - 1 - t);
    double* dst = h.row_ptr(t);
    std::copy(f, f + u, dst);
    std::copy(b, b + u, dst + u);
  }
  return h;
}

MatrixD BiLstmEncoder::backward(const BiLstmCache& c, const MatrixD& d_h,
                                const std::string& prefix, GradMap& grads) const {
  const std::size_t n = c.steps;
  const std::size_t u = cfg_.hidden_size;
  if (d_h.rows != n || d_h.cols != 2 * u)
    throw std::invalid_argument("bilstm backward: upstream gradient shape mismatch");
  MatrixD d_f(n, u), d_b_rev(n, u);
  for (std::size_t t = 0; t < n; ++t) {
    const double* src = d_h.row_ptr(t);
    std::copy(src, src + u, d_f.row_ptr(t));
    std::copy(src + u, src + 2 * u, d_b_rev.row_ptr(n - 1 - t));
  }
  MatrixD d_in = fwd_.backward(c.fwd, d_f, prefix + "fwd.", grads);
  const MatrixD d_in_rev = bwd_.backward(c.bwd, d_b_rev, prefix + "bwd.", grads);
  const MatrixD d_in_b = reverse_rows(d_in_rev);
  add_into(d_in, d_in_b);
  return d_in;
}

void self_attention_forward(const Matrix& w_s1, const Matrix& w_s2, const MatrixD& h,
                            AttentionCacheD& cache) {
  if (h.rows == 0) throw std::invalid_argument("self_attention: empty H");
  if (w_s1.cols != h.cols)
    throw std::invalid_argument("self_attention: W_s1 width " + std::to_string(w_s1.cols) +
                                " does not match H width " + std::to_string(h.cols));
  if (w_s2.cols != w_s1.rows)
    throw std::invalid_argument("self_attention: W_s2 width does not match W_s1 rows");

  cache.h_attn = matmul(w_s1, transpose(h));  // d_a x n
  for (double& v : cache.h_attn.data) v = std::tanh(v);
  cache.a = softmax_rows(matmul(w_s2, cache.h_attn));  // r x n
  for (std::size_t i = 0; i < cache.a.rows; ++i) {
    double sum = 0.0;
    const double* row = cache.a.row_ptr(i);
    for (std::size_t j = 0; j < cache.a.cols; ++j) sum += row[j];
    if (std::abs(sum - 1.0) > 1e-5)
      throw std::logic_error("self_attention: attention row does not sum to 1");
  }
  cache.m = matmul(cache.a, h);  // r x 2u
}

AttentionBundle self_attention(const AttentionParams& params, const Matrix& h) {
  AttentionCacheD cache;
  self_attention_forward(params.w_s1, params.w_s2, widen(h), cache);
  AttentionBundle bundle;
  bundle.hidden_states = h;
  bundle.hidden_attention = narrow(cache.h_attn);
  bundle.attention = narrow(cache.a);
  bundle.sentence_embedding = narrow(cache.m);
  return bundle;
}

MatrixD self_attention_backward(const Matrix& w_s1, const Matrix& w_s2, const MatrixD& h,
                                const AttentionCacheD& cache, const MatrixD& d_m,
                                const MatrixD* d_a_extra, const std::string& prefix,
                                GradMap& grads) {
  if (cache.a.rows == 0) throw std::logic_error("self_attention backward: stale cache");
  const std::size_t r = cache.a.rows;
  const std::size_t n = cache.a.cols;

  // dL/dA from M = A H, plus any direct contribution (penalization).
  MatrixD d_a = matmul(d_m, transpose(h));  // r x n
  if (d_a_extra) add_into(d_a, *d_a_extra);

  MatrixD d_h = matmul(transpose(cache.a), d_m);  // n x 2u

  // Row softmax backward: dZ = A o (dA - <dA, A>_row).
  MatrixD d_z(r, n);
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = cache.a.row_ptr(i);
    const double* darow = d_a.row_ptr(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += darow[j] * arow[j];
    double* dzrow = d_z.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) dzrow[j] = arow[j] * (darow[j] - dot);
  }

  MatrixD& dw_s2 = grad_slot(grads, prefix + "w_s2", w_s2.rows, w_s2.cols);
  add_into(dw_s2, matmul(d_z, transpose(cache.h_attn)));

  MatrixD d_ha = matmul(transpose(w_s2), d_z);  // d_a x n
  for (std::size_t i = 0; i < d_ha.size(); ++i)
    d_ha.data[i] *= 1.0 - cache.h_attn.data[i] * cache.h_attn.data[i];

  MatrixD& dw_s1 = grad_slot(grads, prefix + "w_s1", w_s1.rows, w_s1.cols);
  add_into(dw_s1, matmul(d_ha, h));

  const MatrixD back = matmul(transpose(w_s1), d_ha);  // 2u x n
  for (std::size_t t = 0; t < d_h.rows; ++t)
    for (std::size_t j = 0; j < d_h.cols; ++j) d_h(t, j) += back(j, t);
  return d_h;
}

double penalization(const MatrixD& attention) {
  const std::size_t r = attention.rows;
  const std::size_t n = attention.cols;
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double* ri = attention.row_ptr(i);
    for (std::size_t j = 0; j < r; ++j) {
      const double* rj = attention.row_ptr(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += ri[k] * rj[k];
      const double g = dot - (i == j ? 1.0 : 0.0);
      total += g * g;
    }
  }
  return total;
}

double penalization(const Matrix& attention) { return penalization(widen(attention)); }

void penalization_backward(const MatrixD& attention, double upstream, MatrixD& d_a) {
  const std::size_t r = attention.rows;
  const std::size_t n = attention.cols;
  if (d_a.rows != r || d_a.cols != n)
    throw std::invalid_argument("penalization_backward: shape mismatch");
  // dP/dA = 4 (A A^T - I) A, since A A^T - I is symmetric.
  MatrixD gram(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      double dot = 0.0;
      const double* ri = attention.row_ptr(i);
      const double* rj = attention.row_ptr(j);
      for (std::size_t k = 0; k < n; ++k) dot += ri[k] * rj[k];
      gram(i, j) = dot - (i == j ? 1.0 : 0.0);
    }
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      const double c = 4.0 * upstream * gram(i, j);
      if (c == 0.0) continue;
      const double* rj = attention.row_ptr(j);
      double* di = d_a.row_ptr(i);
      for (std::size_t k = 0; k < n; ++k) di[k] += c * rj[k];
    }
}

BaselineClassifier::BaselineClassifier(const BaselineConfig& cfg, RngState& rng) : cfg_(cfg) {
  LstmStackConfig sc{cfg.layers, cfg.input_size, cfg.hidden_size, 0.0};
  lstm_ = LstmStack(sc, rng);
  head_.weight = init_uniform_xavier(cfg.hidden_size, 1, rng);
  head_.bias = Matrix(1, 1);
}

NamedParams BaselineClassifier::named_params() {
  NamedParams out;
  lstm_.collect_params("lstm.", out);
  out.emplace_back("head.weight", &head_.weight);
  out.emplace_back("head.bias", &head_.bias);
  return out;
}

double BaselineClassifier::forward(const Matrix& embedded, bool train, RngState& rng,
                                   BaselineCache* cache) const {
  BaselineCache local;
  BaselineCache& c = cache ? *cache : local;
  c = BaselineCache{};
  c.top = lstm_.forward(widen(embedded), train, rng, &c.lstm);

  const std::size_t h = cfg_.hidden_size;
  const double* h_final = c.top.row_ptr(c.top.rows - 1);
  c.dropped.assign(h_final, h_final + h);
  if (train && cfg_.dropout > 0.0) {
    const double p = cfg_.dropout;
    const double scale = 1.0 / (1.0 - p);
    c.drop_mask.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
      c.drop_mask[j] = rng.uniform() >= p ? scale : 0.0;
      c.dropped[j] *= c.drop_mask[j];
    }
  }
  double logit = static_cast<double>(head_.bias(0, 0));
  for (std::size_t j = 0; j < h; ++j)
    logit += c.dropped[j] * static_cast<double>(head_.weight(j, 0));
  c.logit = logit;
  c.p = sigmoid(logit);
  return c.p;
}

MatrixD BaselineClassifier::backward(const BaselineCache& c, double d_p, GradMap& grads) const {
  if (c.top.rows == 0) throw std::logic_error("baseline backward: stale or missing cache");
  const std::size_t h = cfg_.hidden_size;
  const double dz = d_p * c.p * (1.0 - c.p);

  MatrixD& dw = grad_slot(grads, "head.weight", h, 1);
  MatrixD& db = grad_slot(grads, "head.bias", 1, 1);
  db.data[0] += dz;
  std::vector<double> dh(h);
  for (std::size_t j = 0; j < h; ++j) {
    dw(j, 0) += dz * c.dropped[j];
    dh[j] = dz * static_cast<double>(head_.weight(j, 0));
    if (!c.drop_mask.empty()) dh[j] *= c.drop_mask[j];
  }

  MatrixD d_top(c.top.rows, h);
  std::copy(dh.begin(), dh.end(), d_top.row_ptr(c.top.rows - 1));
  return lstm_.backward(c.lstm, d_top, "lstm.", grads);
}

AttentionClassifier::AttentionClassifier(const AttentionNetConfig& cfg, RngState& rng)
    : cfg_(cfg) {
  LstmStackConfig sc{cfg.layers, cfg.input_size, cfg.hidden_size, cfg.dropout};
  encoder_ = BiLstmEncoder(sc, rng);
  const std::size_t two_u = 2 * cfg.hidden_size;
  attn_.w_s1 = init_uniform_xavier(cfg.attn_dim, two_u, rng);
  attn_.w_s2 = init_uniform_xavier(cfg.hops, cfg.attn_dim, rng);
  fc_.weight = init_uniform_xavier(cfg.hops * two_u, cfg.fc_width, rng);
  fc_.bias = Matrix(1, cfg.fc_width);
  out_.weight = init_uniform_xavier(cfg.fc_width, 1, rng);
  out_.bias = Matrix(1, 1);
}

NamedParams AttentionClassifier::named_params() {
  NamedParams out;
  encoder_.collect_params("bilstm.", out);
  out.emplace_back("attn.w_s1", &attn_.w_s1);
  out.emplace_back("attn.w_s2", &attn_.w_s2);
  out.emplace_back("fc.weight", &fc_.weight);
  out.emplace_back("fc.bias", &fc_.bias);
  out.emplace_back("out.weight", &out_.weight);
  out.emplace_back("out.bias", &out_.bias);
  return out;
}

double AttentionClassifier::forward(const Matrix& embedded, bool train, RngState& rng,
                                    AttentionNetCache* cache) const {
  AttentionNetCache local;
  AttentionNetCache& c = cache ? *cache : local;
  c = AttentionNetCache{};
  c.h = encoder_.forward(widen(embedded), train, rng, &c.encoder);
  self_attention_forward(attn_.w_s1, attn_.w_s2, c.h, c.attn);

  c.m_flat.assign(c.attn.m.data.begin(), c.attn.m.data.end());  // row-major flatten
  const std::size_t fcw = cfg_.fc_width;
  std::vector<double> pre(fcw);
  for (std::size_t j = 0; j < fcw; ++j) pre[j] = static_cast<double>(fc_.bias.data[j]);
  matvec_acc(c.m_flat.data(), fc_.weight, pre.data());
  c.fc_act.resize(fcw);
  for (std::size_t j = 0; j < fcw; ++j) c.fc_act[j] = std::tanh(pre[j]);

  double logit = static_cast<double>(out_.bias(0, 0));
  for (std::size_t j = 0; j < fcw; ++j)
    logit += c.fc_act[j] * static_cast<double>(out_.weight(j, 0));
  c.logit = logit;
  c.p = sigmoid(logit);
  return c.p;
}

MatrixD AttentionClassifier::backward(const AttentionNetCache& c, double d_p, double d_pen,
                                      GradMap& grads) const {
  if (c.h.rows == 0) throw std::logic_error("attention backward: stale or missing cache");
  const std::size_t fcw = cfg_.fc_width;
  const std::size_t flat = c.m_flat.size();
  const double dz = d_p * c.p * (1.0 - c.p);

  MatrixD& dow = grad_slot(grads, "out.weight", fcw, 1);
  MatrixD& dob = grad_slot(grads, "out.bias", 1, 1);
  dob.data[0] += dz;
  std::vector<double> d_pre(fcw);
  for (std::size_t j = 0; j < fcw; ++j) {
    dow(j, 0) += dz * c.fc_act[j];
    const double d_act = dz * static_cast<double>(out_.weight(j, 0));
    d_pre[j] = d_act * (1.0 - c.fc_act[j] * c.fc_act[j]);
  }

  MatrixD& dfw = grad_slot(grads, "fc.weight", flat, fcw);
  MatrixD& dfb = grad_slot(grads, "fc.bias", 1, fcw);
  outer_acc(c.m_flat.data(), flat, d_pre.data(), fcw, dfw);
  for (std::size_t j = 0; j < fcw; ++j) dfb.data[j] += d_pre[j];

  std::vector<double> d_flat(flat, 0.0);
  matvec_transposed_acc(d_pre.data(), fc_.weight, d_flat.data());
  MatrixD d_m(cfg_.hops, 2 * cfg_.hidden_size);
  std::copy(d_flat.begin(), d_flat.end(), d_m.data.begin());

  MatrixD d_a_extra;
  const MatrixD* extra = nullptr;
  if (d_pen != 0.0) {
    d_a_extra = MatrixD(c.attn.a.rows, c.attn.a.cols);
    penalization_backward(c.attn.a, d_pen, d_a_extra);
    extra = &d_a_extra;
  }
  const MatrixD d_h =
      self_attention_backward(attn_.w_s1, attn_.w_s2, c.h, c.attn, d_m, extra, "attn.", grads);
  return encoder_.backward(c.encoder, d_h, "bilstm.", grads);
}

}  // namespace snet
