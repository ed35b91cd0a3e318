// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "snet/embeddings.hpp"
#include "snet/networks.hpp"
#include "snet/optim.hpp"

namespace snet {

// Binary cross entropy on a single probability; p is clamped to
// [1e-7, 1 - 1e-7] before the log.
double bce_loss(double p, int y);
double bce_grad(double p, int y);  // dL/dp at the clamped probability

int predict_label(double p);  // p > 0.5 -> 1, ties map to 0

struct Hyperparams {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double learning_rate = 1e-4;
  double dropout = 0.5;
  std::size_t attention_hops = 20;  // r
  std::size_t attention_dim = 150;  // d_a
  double penalization_coeff = 0.6;
  std::size_t fc_width = 2000;
  std::size_t lstm_layers = 8;
  std::size_t lstm_hidden = 64;  // per direction for the joint model
  std::size_t embedding_dim = 300;

  static Hyperparams baseline_defaults() { return Hyperparams{}; }
  static Hyperparams joint_defaults() {
    Hyperparams hp;
    hp.epochs = 20;
    hp.lstm_hidden = 32;
    return hp;
  }

  void validate() const;
  // Fixed-order (name, value) list; the names double as config-file keys.
  std::vector<std::pair<std::string, double>> to_entries() const;
  static Hyperparams from_entries(const std::vector<std::pair<std::string, double>>& entries);
};

enum class ModelKind { baseline, joint };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Structural problems in checkpoint files (bad magic/version, truncation,
// unknown or missing tensors, kind mismatches).
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian container: "SNET" magic, u32 version, kind string,
// hyperparameter entries (f64), vocabulary fingerprints, then named tensors
// as name + rank + u64 dims + raw f32 data, row-major.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelKind kind = ModelKind::baseline;
  Hyperparams hp;
  std::vector<std::pair<std::string, Matrix>> tensors;
  std::map<std::string, std::uint64_t> vocab_hashes;  // language name -> fingerprint

  const Matrix* find_tensor(const std::string& name) const;
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

struct TrainLogRecord {
  std::size_t epoch = 0;
  std::string split;     // "train" | "val"
  std::string language;  // "hindi" | "bengali"
  double loss = 0.0;
  double accuracy = 0.0;
};

std::string train_log_to_csv(const std::vector<TrainLogRecord>& records);
void write_train_log_csv(const std::string& path, const std::vector<TrainLogRecord>& records);

struct TrainOptions {
  std::uint64_t seed = 0;
  // Stop once train accuracy reaches this value; > 1 disables.
  double early_stop_train_accuracy = 2.0;
};

struct BaselineTrainResult {
  Checkpoint best;  // highest validation accuracy (final epoch when no val set)
  std::vector<TrainLogRecord> log;
  double best_val_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// 30-epoch (by default) Adam training of the stacked-LSTM classifier on a
// frozen embedding table.
BaselineTrainResult train_baseline(const std::vector<CleanExample>& train_set,
                                   const std::vector<CleanExample>& val_set,
                                   const EmbeddingTable& embeddings, Language lang,
                                   const Hyperparams& hp, const TrainOptions& opt);

// Baseline model rebuilt bit-exactly from a source checkpoint, ready to
// fine-tune against a different (frozen) embedding table.
struct TransferInit {
  BaselineClassifier model;
  Hyperparams source_hp;
};
TransferInit transfer_init(const Checkpoint& source, const EmbeddingTable& target_embeddings);

BaselineTrainResult train_transfer(const Checkpoint& source,
                                   const std::vector<CleanExample>& train_set,
                                   const std::vector<CleanExample>& val_set,
                                   const EmbeddingTable& target_embeddings, Language lang,
                                   const Hyperparams& hp, const TrainOptions& opt);

struct JointStepStats {
  double joint_loss = 0.0;
  double bce_hindi = 0.0;    // batch mean
  double bce_bengali = 0.0;  // batch mean
  double pen_hindi = 0.0;    // batch mean penalization
  double pen_bengali = 0.0;
  std::size_t correct_hindi = 0, count_hindi = 0;
  std::size_t correct_bengali = 0, count_bengali = 0;
};

struct JointTrainResult {
  Checkpoint best;
  std::vector<TrainLogRecord> log;
  std::vector<JointStepStats> step_stats;
  std::size_t recycles = 0;  // shorter-corpus reshuffles within epochs
  double best_val_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// One shared BiLSTM+attention network trained on both languages, switching
// the embedding table per batch. Each optimizer step consumes one batch per
// language and minimizes BCE_h + BCE_b + coeff * (mean P_h + mean P_b).
class JointTrainer {
 public:
  JointTrainer(const EmbeddingTable& hindi_embeddings, const EmbeddingTable& bengali_embeddings,
               const Hyperparams& hp, std::uint64_t seed);

  AttentionClassifier& model() { return model_; }
  RngState& rng() { return rng_; }
  const Hyperparams& hyperparams() const { return hp_; }
  const EmbeddingTable& embeddings(Language lang) const;

  JointStepStats step(std::span<const CleanExample> hindi_batch,
                      std::span<const CleanExample> bengali_batch);

  JointTrainResult train(const std::vector<CleanExample>& hindi_train,
                         const std::vector<CleanExample>& hindi_val,
                         const std::vector<CleanExample>& bengali_train,
                         const std::vector<CleanExample>& bengali_val, const TrainOptions& opt);

 private:
  Hyperparams hp_;
  const EmbeddingTable* hindi_;
  const EmbeddingTable* bengali_;
  RngState rng_;
  AttentionClassifier model_;
  AdamState adam_;
};

JointTrainResult train_joint(const std::vector<CleanExample>& hindi_train,
                             const std::vector<CleanExample>& hindi_val,
                             const std::vector<CleanExample>& bengali_train,
                             const std::vector<CleanExample>& bengali_val,
                             const EmbeddingTable& hindi_embeddings,
                             const EmbeddingTable& bengali_embeddings, const Hyperparams& hp,
                             const TrainOptions& opt);

Checkpoint make_baseline_checkpoint(BaselineClassifier& model, const Hyperparams& hp,
                                    const EmbeddingTable& embeddings, Language lang);
Checkpoint make_joint_checkpoint(AttentionClassifier& model, const Hyperparams& hp,
                                 const EmbeddingTable& hindi_embeddings,
                                 const EmbeddingTable& bengali_embeddings);

// Validate the tensor set against the architecture in hp and copy bits in.
BaselineClassifier baseline_from_checkpoint(const Checkpoint& ckpt);
AttentionClassifier attention_from_checkpoint(const Checkpoint& ckpt);
Language baseline_language(const Checkpoint& ckpt);

// Mean BCE and accuracy over a split in eval mode.
struct SplitEval {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};
SplitEval evaluate_split(const BaselineClassifier& model, const EmbeddingTable& table,
                         std::span<const CleanExample> examples);
SplitEval evaluate_split(const AttentionClassifier& model, const EmbeddingTable& table,
                         std::span<const CleanExample> examples);

}  // namespace snet
