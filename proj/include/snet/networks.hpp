// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snet/numerics.hpp"

namespace snet {

// Gate parameters for one LSTM layer. Row-vector convention: x(1xin),
// h(1xhidden), weights in x hidden / hidden x hidden.
struct LstmLayerParams {
  Matrix w_i, w_f, w_g, w_o;  // input weights
  Matrix u_i, u_f, u_g, u_o;  // recurrent weights
  Matrix b_i, b_f, b_g, b_o;  // 1 x hidden biases
};

struct LstmStackConfig {
  std::size_t layers = 1;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  double interlayer_dropout = 0.0;  // between stacked layers, train mode only
};

struct LstmStackCache {
  std::size_t steps = 0;
  bool train = false;
  std::vector<MatrixD> inputs;  // per layer: what actually fed the gates (post-dropout)
  std::vector<MatrixD> gate_i, gate_f, gate_g, gate_o;  // per layer, n x h
  std::vector<MatrixD> cell, hidden;                    // per layer, n x h
  std::vector<MatrixD> drop_mask;  // per layer boundary, n x h, entries 0 or 1/(1-p)
};

// Stacked unidirectional LSTM with zero initial states. Forward returns the
// top layer's hidden state at every timestep; backward is exact BPTT given
// upstream gradients on those outputs.
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(const LstmStackConfig& cfg, RngState& rng);

  const LstmStackConfig& config() const { return cfg_; }
  std::vector<LstmLayerParams>& layers() { return layers_; }
  const std::vector<LstmLayerParams>& layers() const { return layers_; }

  // Names are "<prefix>l<k>.w_i" ... "<prefix>l<k>.b_o".
  void collect_params(const std::string& prefix, NamedParams& out);

  MatrixD forward(const MatrixD& input, bool train, RngState& rng, LstmStackCache* cache) const;
  // d_top: n x h gradient on the top layer outputs. Returns d_input (n x in).
  MatrixD backward(const LstmStackCache& cache, const MatrixD& d_top, const std::string& prefix,
                   GradMap& grads) const;

 private:
  LstmStackConfig cfg_;
  std::vector<LstmLayerParams> layers_;
};

struct BiLstmCache {
  LstmStackCache fwd, bwd;
  std::size_t steps = 0;
};

// Two independent directional stacks; H row t is [fwd_h_t || bwd_h_t] of the
// top layers, with the backward stack consuming the reversed sequence.
class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(const LstmStackConfig& per_direction, RngState& rng);

  const LstmStackConfig& config() const { return cfg_; }
  LstmStack& forward_stack() { return fwd_; }
  LstmStack& backward_stack() { return bwd_; }

  void collect_params(const std::string& prefix, NamedParams& out);  // prefix + "fwd."/"bwd."

  MatrixD forward(const MatrixD& input, bool train, RngState& rng, BiLstmCache* cache) const;
  MatrixD backward(const BiLstmCache& cache, const MatrixD& d_h, const std::string& prefix,
                   GradMap& grads) const;

 private:
  LstmStackConfig cfg_;
  LstmStack fwd_, bwd_;
};

struct AttentionParams {
  Matrix w_s1;  // d_a x 2u
  Matrix w_s2;  // r x d_a
};

struct AttentionBundle {
  Matrix hidden_states;       // H, n x 2u
  Matrix hidden_attention;    // H_a = tanh(W_s1 H^T), d_a x n
  Matrix attention;           // A = softmax_rows(W_s2 H_a), r x n
  Matrix sentence_embedding;  // M = A H, r x 2u
};

// Double-precision internals kept for the backward pass.
struct AttentionCacheD {
  MatrixD h_attn;  // d_a x n
  MatrixD a;       // r x n
  MatrixD m;       // r x 2u
};

AttentionBundle self_attention(const AttentionParams& params, const Matrix& h);

void self_attention_forward(const Matrix& w_s1, const Matrix& w_s2, const MatrixD& h,
                            AttentionCacheD& cache);

// d_m is dL/dM; d_a_extra (may be null) is added to dL/dA before the softmax
// backward. Returns dL/dH; parameter grads accumulate under
// "<prefix>w_s1" / "<prefix>w_s2".
MatrixD self_attention_backward(const Matrix& w_s1, const Matrix& w_s2, const MatrixD& h,
                                const AttentionCacheD& cache, const MatrixD& d_m,
                                const MatrixD* d_a_extra, const std::string& prefix,
                                GradMap& grads);

// ||A A^T - I||_F^2
double penalization(const Matrix& attention);
double penalization(const MatrixD& attention);
// d_a += upstream * 4 (A A^T - I) A
void penalization_backward(const MatrixD& attention, double upstream, MatrixD& d_a);

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct BaselineConfig {
  std::size_t layers = 8;
  std::size_t input_size = 300;
  std::size_t hidden_size = 64;
  double dropout = 0.5;  // on the final hidden state, train mode only
};

struct BaselineCache {
  LstmStackCache lstm;
  MatrixD top;                    // n x h
  std::vector<double> drop_mask;  // h entries of 0 or 1/(1-p); empty in eval
  std::vector<double> dropped;    // final hidden state after dropout
  double logit = 0.0;
  double p = 0.0;
};

// Stacked LSTM -> dropout -> affine -> sigmoid, reading the final timestep's
// top-layer hidden state.
class BaselineClassifier {
 public:
  BaselineClassifier() = default;
  BaselineClassifier(const BaselineConfig& cfg, RngState& rng);

  const BaselineConfig& config() const { return cfg_; }
  NamedParams named_params();  // "lstm.l<k>.*", "head.weight", "head.bias"
  LstmStack& lstm() { return lstm_; }
  DenseLayer& head() { return head_; }

  double forward(const Matrix& embedded, bool train, RngState& rng, BaselineCache* cache) const;
  // d_p = dL/dp. Returns dL/dT (the embedding-input gradient; callers drop it
  // since embeddings stay frozen).
  MatrixD backward(const BaselineCache& cache, double d_p, GradMap& grads) const;

 private:
  BaselineConfig cfg_;
  LstmStack lstm_;
  DenseLayer head_;
};

struct AttentionNetConfig {
  std::size_t layers = 8;
  std::size_t input_size = 300;
  std::size_t hidden_size = 32;  // u, per direction
  std::size_t attn_dim = 150;    // d_a
  std::size_t hops = 20;         // r
  std::size_t fc_width = 2000;
  double dropout = 0.5;  // inter-layer, both directions
};

struct AttentionNetCache {
  BiLstmCache encoder;
  MatrixD h;  // n x 2u
  AttentionCacheD attn;
  std::vector<double> m_flat;  // r * 2u
  std::vector<double> fc_act;  // tanh activations, fc_width
  double logit = 0.0;
  double p = 0.0;
};

// BiLSTM -> structured self-attention -> flatten(M) -> affine+tanh ->
// affine+sigmoid.
class AttentionClassifier {
 public:
  AttentionClassifier() = default;
  AttentionClassifier(const AttentionNetConfig& cfg, RngState& rng);

  const AttentionNetConfig& config() const { return cfg_; }
  NamedParams named_params();  // "bilstm.*", "attn.w_s1/w_s2", "fc.*", "out.*"
  BiLstmEncoder& encoder() { return encoder_; }
  AttentionParams& attention_params() { return attn_; }
  DenseLayer& fc() { return fc_; }
  DenseLayer& output_layer() { return out_; }

  double forward(const Matrix& embedded, bool train, RngState& rng,
                 AttentionNetCache* cache) const;
  // d_p = dL/dp, d_pen = dL/dP for this example's penalization term (0 when
  // the term is unused). Returns dL/dT.
  MatrixD backward(const AttentionNetCache& cache, double d_p, double d_pen,
                   GradMap& grads) const;

 private:
  AttentionNetConfig cfg_;
  BiLstmEncoder encoder_;
  AttentionParams attn_;
  DenseLayer fc_;
  DenseLayer out_;
};

MatrixD reverse_rows(const MatrixD& m);

}  // namespace snet
