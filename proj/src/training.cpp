// SPDX-License-Identifier: Apache-2.0
#include "snet/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace snet {

namespace {
constexpr double kProbClamp = 1e-7;
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double bce_grad(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return (q - static_cast<double>(y)) / (q * (1.0 - q));
}

int predict_label(double p) { return p > 0.5 ? 1 : 0; }

void Hyperparams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw std::invalid_argument(std::string("hyperparams: ") + name + " must be positive");
  };
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(epochs), "epochs");
  positive(learning_rate, "learning_rate");
  positive(static_cast<double>(attention_hops), "attention_hops");
  positive(static_cast<double>(attention_dim), "attention_dim");
  positive(static_cast<double>(fc_width), "fc_width");
  positive(static_cast<double>(lstm_layers), "lstm_layers");
  positive(static_cast<double>(lstm_hidden), "lstm_hidden");
  positive(static_cast<double>(embedding_dim), "embedding_dim");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("hyperparams: dropout must be in [0, 1)");
  if (penalization_coeff < 0.0)
    throw std::invalid_argument("hyperparams: penalization_coeff must be >= 0");
}

std::vector<std::pair<std::string, double>> Hyperparams::to_entries() const {
  return {
      {"batch_size", static_cast<double>(batch_size)},
      {"epochs", static_cast<double>(epochs)},
      {"learning_rate", learning_rate},
      {"dropout", dropout},
      {"attention_hops", static_cast<double>(attention_hops)},
      {"attention_dim", static_cast<double>(attention_dim)},
      {"penalization_coeff", penalization_coeff},
      {"fc_width", static_cast<double>(fc_width)},
      {"lstm_layers", static_cast<double>(lstm_layers)},
      {"lstm_hidden", static_cast<double>(lstm_hidden)},
      {"embedding_dim", static_cast<double>(embedding_dim)},
  };
}

Hyperparams Hyperparams::from_entries(
    const std::vector<std::pair<std::string, double>>& entries) {
  Hyperparams hp;
  std::map<std::string, bool> seen;
  for (const auto& [name, value] : entries) {
    if (seen[name]) throw CheckpointError("duplicate hyperparameter: " + name);
    seen[name] = true;
    if (name == "batch_size") hp.batch_size = static_cast<std::size_t>(value);
    else if (name == "epochs") hp.epochs = static_cast<std::size_t>(value);
    else if (name == "learning_rate") hp.learning_rate = value;
    else if (name == "dropout") hp.dropout = value;
    else if (name == "attention_hops") hp.attention_hops = static_cast<std::size_t>(value);
    else if (name == "attention_dim") hp.attention_dim = static_cast<std::size_t>(value);
    else if (name == "penalization_coeff") hp.penalization_coeff = value;
    else if (name == "fc_width") hp.fc_width = static_cast<std::size_t>(value);
    else if (name == "lstm_layers") hp.lstm_layers = static_cast<std::size_t>(value);
    else if (name == "lstm_hidden") hp.lstm_hidden = static_cast<std::size_t>(value);
    else if (name == "embedding_dim") hp.embedding_dim = static_cast<std::size_t>(value);
    else throw CheckpointError("unknown hyperparameter in checkpoint: " + name);
  }
  for (const auto& [name, value] : hp.to_entries())
    if (!seen[name]) throw CheckpointError("missing hyperparameter in checkpoint: " + name);
  return hp;
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::baseline ? "baseline" : "joint";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "baseline") return ModelKind::baseline;
  if (name == "joint") return ModelKind::joint;
  throw CheckpointError("unknown model kind: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

constexpr char kMagic[4] = {'S', 'N', 'E', 'T'};

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (in.gcount() != sizeof value)
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  return value;
}

std::string read_string(std::istream& in, const char* what) {
  const auto len = read_pod<std::uint32_t>(in, what);
  if (len > (1u << 20)) throw CheckpointError(std::string("implausible string length for ") + what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (in.gcount() != static_cast<std::streamsize>(len))
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  return s;
}

}  // namespace

const Matrix* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [tname, tensor] : tensors)
    if (tname == name) return &tensor;
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(out, version);
  write_string(out, to_string(kind));

  const auto entries = hp.to_entries();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, value] : entries) {
    write_string(out, name);
    write_pod<double>(out, value);
  }

  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_hashes.size()));
  for (const auto& [lang, hash] : vocab_hashes) {
    write_string(out, lang);
    write_pod<std::uint64_t>(out, hash);
  }

  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    write_string(out, name);
    write_pod<std::uint32_t>(out, 2u);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tensor.rows));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tensor.cols));
    out.write(reinterpret_cast<const char*>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CheckpointError(path + ": not a SNET checkpoint");

  Checkpoint ckpt;
  ckpt.version = read_pod<std::uint32_t>(in, "version");
  if (ckpt.version != kCheckpointVersion)
    throw CheckpointError(path + ": unsupported checkpoint version " +
                          std::to_string(ckpt.version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  ckpt.kind = parse_model_kind(read_string(in, "model kind"));

  const auto hp_count = read_pod<std::uint32_t>(in, "hyperparameter count");
  std::vector<std::pair<std::string, double>> entries;
  entries.reserve(hp_count);
  for (std::uint32_t i = 0; i < hp_count; ++i) {
    std::string name = read_string(in, "hyperparameter name");
    const double value = read_pod<double>(in, "hyperparameter value");
    entries.emplace_back(std::move(name), value);
  }
  ckpt.hp = Hyperparams::from_entries(entries);

  const auto hash_count = read_pod<std::uint32_t>(in, "vocabulary hash count");
  for (std::uint32_t i = 0; i < hash_count; ++i) {
    std::string lang = read_string(in, "vocabulary hash language");
    ckpt.vocab_hashes[lang] = read_pod<std::uint64_t>(in, "vocabulary hash");
  }

  const auto tensor_count = read_pod<std::uint64_t>(in, "tensor count");
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    std::string name = read_string(in, "tensor name");
    const auto rank = read_pod<std::uint32_t>(in, "tensor rank");
    if (rank != 2) throw CheckpointError(path + ": unsupported tensor rank for " + name);
    const auto rows = read_pod<std::uint64_t>(in, "tensor rows");
    const auto cols = read_pod<std::uint64_t>(in, "tensor cols");
    if (rows == 0 || cols == 0 || rows * cols > (1ull << 32))
      throw CheckpointError(path + ": implausible tensor shape for " + name);
    Matrix tensor(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    in.read(reinterpret_cast<char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(tensor.data.size() * sizeof(float)))
      throw CheckpointError(path + ": checkpoint truncated in tensor data of " + name);
    ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw CheckpointError(path + ": trailing bytes after tensor data");
  return ckpt;
}

// ---------------------------------------------------------------------------
// Model <-> checkpoint plumbing

namespace {

std::string embed_tensor_name(Language lang) { return "embed." + to_string(lang); }

void append_params(Checkpoint& ckpt, const NamedParams& params) {
  for (const auto& [name, mat] : params) ckpt.tensors.emplace_back(name, *mat);
}

// Copy checkpoint tensors into the model parameters; every expected name must
// be present with the right shape, and nothing unexpected may remain.
void load_params(const Checkpoint& ckpt, const NamedParams& params,
                 const std::vector<std::string>& extra_expected) {
  std::vector<std::string> offenders;
  std::map<std::string, const Matrix*> available;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (!available.emplace(name, &tensor).second) offenders.push_back("duplicate:" + name);
  }
  for (const auto& [name, mat] : params) {
    auto it = available.find(name);
    if (it == available.end()) {
      offenders.push_back("missing:" + name);
      continue;
    }
    if (it->second->rows != mat->rows || it->second->cols != mat->cols) {
      offenders.push_back("shape:" + name);
      continue;
    }
    *mat = *it->second;
    available.erase(it);
  }
  for (const auto& name : extra_expected) {
    if (available.erase(name) == 0) offenders.push_back("missing:" + name);
  }
  for (const auto& [name, tensor] : available) offenders.push_back("unexpected:" + name);
  if (!offenders.empty()) {
    std::string msg = "incompatible checkpoint tensors:";
    for (const auto& o : offenders) msg += " " + o;
    throw CheckpointError(msg);
  }
}

BaselineConfig baseline_config_from(const Hyperparams& hp) {
  return BaselineConfig{hp.lstm_layers, hp.embedding_dim, hp.lstm_hidden, hp.dropout};
}

AttentionNetConfig attention_config_from(const Hyperparams& hp) {
  return AttentionNetConfig{hp.lstm_layers,   hp.embedding_dim, hp.lstm_hidden, hp.attention_dim,
                            hp.attention_hops, hp.fc_width,      hp.dropout};
}

}  // namespace

Checkpoint make_baseline_checkpoint(BaselineClassifier& model, const Hyperparams& hp,
                                    const EmbeddingTable& embeddings, Language lang) {
  Checkpoint ckpt;
  ckpt.kind = ModelKind::baseline;
  ckpt.hp = hp;
  append_params(ckpt, model.named_params());
  ckpt.tensors.emplace_back(embed_tensor_name(lang), embeddings.vectors);
  ckpt.vocab_hashes[to_string(lang)] = embeddings.fingerprint();
  return ckpt;
}

Checkpoint make_joint_checkpoint(AttentionClassifier& model, const Hyperparams& hp,
                                 const EmbeddingTable& hindi_embeddings,
                                 const EmbeddingTable& bengali_embeddings) {
  Checkpoint ckpt;
  ckpt.kind = ModelKind::joint;
  ckpt.hp = hp;
  append_params(ckpt, model.named_params());
  ckpt.tensors.emplace_back(embed_tensor_name(Language::hindi), hindi_embeddings.vectors);
  ckpt.tensors.emplace_back(embed_tensor_name(Language::bengali), bengali_embeddings.vectors);
  ckpt.vocab_hashes[to_string(Language::hindi)] = hindi_embeddings.fingerprint();
  ckpt.vocab_hashes[to_string(Language::bengali)] = bengali_embeddings.fingerprint();
  return ckpt;
}

Language baseline_language(const Checkpoint& ckpt) {
  if (ckpt.kind != ModelKind::baseline)
    throw CheckpointError("baseline_language: checkpoint kind is " + to_string(ckpt.kind));
  const bool hindi = ckpt.find_tensor(embed_tensor_name(Language::hindi)) != nullptr;
  const bool bengali = ckpt.find_tensor(embed_tensor_name(Language::bengali)) != nullptr;
  if (hindi == bengali)
    throw CheckpointError("baseline checkpoint must carry exactly one embedding tensor");
  return hindi ? Language::hindi : Language::bengali;
}

BaselineClassifier baseline_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != ModelKind::baseline)
    throw CheckpointError("model kind mismatch: expected baseline, checkpoint is " +
                          to_string(ckpt.kind));
  ckpt.hp.validate();
  RngState scratch(0);
  BaselineClassifier model(baseline_config_from(ckpt.hp), scratch);
  load_params(ckpt, model.named_params(), {embed_tensor_name(baseline_language(ckpt))});
  return model;
}

AttentionClassifier attention_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != ModelKind::joint)
    throw CheckpointError("model kind mismatch: expected joint, checkpoint is " +
                          to_string(ckpt.kind));
  ckpt.hp.validate();
  RngState scratch(0);
  AttentionClassifier model(attention_config_from(ckpt.hp), scratch);
  load_params(ckpt, model.named_params(),
              {embed_tensor_name(Language::hindi), embed_tensor_name(Language::bengali)});
  return model;
}

// ---------------------------------------------------------------------------
// Training loops

std::string train_log_to_csv(const std::vector<TrainLogRecord>& records) {
  std::string out = "epoch,split,language,loss,accuracy\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.9g,%.9g\n", r.epoch, r.split.c_str(),
                  r.language.c_str(), r.loss, r.accuracy);
    out += buf;
  }
  return out;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write training log: " + path);
  out << train_log_to_csv(records);
  if (!out) throw IoError("failed writing training log: " + path);
}

namespace {

void check_language(std::span<const CleanExample> examples, Language lang, const char* what) {
  for (const auto& ex : examples)
    if (ex.language != lang)
      throw std::invalid_argument(std::string(what) + ": example " + ex.id +
                                  " is tagged " + to_string(ex.language) + ", expected " +
                                  to_string(lang));
}

template <typename Model>
SplitEval evaluate_split_impl(const Model& model, const EmbeddingTable& table,
                              std::span<const CleanExample> examples) {
  SplitEval eval;
  eval.count = examples.size();
  if (examples.empty()) return eval;
  RngState unused(0);
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const double p = model.forward(table.embed(ex.tokens), false, unused, nullptr);
    loss += bce_loss(p, ex.label);
    if (predict_label(p) == ex.label) ++correct;
  }
  eval.loss = loss / static_cast<double>(examples.size());
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  return eval;
}

BaselineTrainResult run_baseline_training(BaselineClassifier& model,
                                          const std::vector<CleanExample>& train_set,
                                          const std::vector<CleanExample>& val_set,
                                          const EmbeddingTable& embeddings, Language lang,
                                          const Hyperparams& hp, const TrainOptions& opt,
                                          RngState& rng) {
  hp.validate();
  if (train_set.empty()) throw std::invalid_argument("train_baseline: empty training set");
  if (embeddings.dim() != hp.embedding_dim)
    throw std::invalid_argument("train_baseline: embedding dim " +
                                std::to_string(embeddings.dim()) + " != configured " +
                                std::to_string(hp.embedding_dim));
  check_language(train_set, lang, "train set");
  check_language(val_set, lang, "validation set");

  BaselineTrainResult result;
  AdamState adam(AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8});
  const NamedParams params = model.named_params();

  BaselineClassifier best_model = model;
  double best_acc = -1.0;
  std::size_t best_epoch = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hp.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      GradMap grads = zero_grads_like(params);
      for (std::size_t b = start; b < stop; ++b) {
        const CleanExample& ex = train_set[order[b]];
        BaselineCache cache;
        const double p = model.forward(embeddings.embed(ex.tokens), true, rng, &cache);
        loss_sum += bce_loss(p, ex.label);
        if (predict_label(p) == ex.label) ++correct;
        model.backward(cache, bce_grad(p, ex.label) * inv, grads);
      }
      if (!std::isfinite(loss_sum))
        throw std::runtime_error("train_baseline: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(start / hp.batch_size + 1));
      adam.step(params, grads);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    const double train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    result.log.push_back({epoch, "train", to_string(lang), train_loss, train_acc});

    if (!val_set.empty()) {
      const SplitEval val = evaluate_split(model, embeddings, val_set);
      result.log.push_back({epoch, "val", to_string(lang), val.loss, val.accuracy});
      if (val.accuracy > best_acc) {
        best_acc = val.accuracy;
        best_epoch = epoch;
        best_model = model;
      }
    } else {
      best_acc = train_acc;
      best_epoch = epoch;
      best_model = model;
    }
    result.epochs_run = epoch;
    if (train_acc >= opt.early_stop_train_accuracy) break;
  }

  result.best = make_baseline_checkpoint(best_model, hp, embeddings, lang);
  result.best_val_accuracy = best_acc;
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace

SplitEval evaluate_split(const BaselineClassifier& model, const EmbeddingTable& table,
                         std::span<const CleanExample> examples) {
  return evaluate_split_impl(model, table, examples);
}

SplitEval evaluate_split(const AttentionClassifier& model, const EmbeddingTable& table,
                         std::span<const CleanExample> examples) {
  return evaluate_split_impl(model, table, examples);
}

BaselineTrainResult train_baseline(const std::vector<CleanExample>& train_set,
                                   const std::vector<CleanExample>& val_set,
                                   const EmbeddingTable& embeddings, Language lang,
                                   const Hyperparams& hp, const TrainOptions& opt) {
  hp.validate();
  RngState rng(opt.seed);
  BaselineClassifier model(baseline_config_from(hp), rng);
  return run_baseline_training(model, train_set, val_set, embeddings, lang, hp, opt, rng);
}

TransferInit transfer_init(const Checkpoint& source, const EmbeddingTable& target_embeddings) {
  if (source.kind != ModelKind::baseline)
    throw CheckpointError("transfer_init: source checkpoint kind is " + to_string(source.kind) +
                          ", expected baseline");
  if (target_embeddings.dim() != source.hp.embedding_dim)
    throw std::invalid_argument("transfer_init: target embedding dim " +
                                std::to_string(target_embeddings.dim()) + " != source " +
                                std::to_string(source.hp.embedding_dim));
  return TransferInit{baseline_from_checkpoint(source), source.hp};
}

BaselineTrainResult train_transfer(const Checkpoint& source,
                                   const std::vector<CleanExample>& train_set,
                                   const std::vector<CleanExample>& val_set,
                                   const EmbeddingTable& target_embeddings, Language lang,
                                   const Hyperparams& hp, const TrainOptions& opt) {
  TransferInit init = transfer_init(source, target_embeddings);
  if (hp.lstm_layers != source.hp.lstm_layers || hp.lstm_hidden != source.hp.lstm_hidden ||
      hp.embedding_dim != source.hp.embedding_dim)
    throw std::invalid_argument(
        "train_transfer: architecture hyperparameters must match the source checkpoint");
  RngState rng(opt.seed);
  return run_baseline_training(init.model, train_set, val_set, target_embeddings, lang, hp, opt,
                               rng);
}

// ---------------------------------------------------------------------------
// Joint dual-input training

JointTrainer::JointTrainer(const EmbeddingTable& hindi_embeddings,
                           const EmbeddingTable& bengali_embeddings, const Hyperparams& hp,
                           std::uint64_t seed)
    : hp_(hp), hindi_(&hindi_embeddings), bengali_(&bengali_embeddings), rng_(seed),
      adam_(AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8}) {
  hp_.validate();
  if (hindi_->dim() != hp_.embedding_dim || bengali_->dim() != hp_.embedding_dim)
    throw std::invalid_argument("JointTrainer: embedding tables must have dim " +
                                std::to_string(hp_.embedding_dim));
  model_ = AttentionClassifier(attention_config_from(hp_), rng_);
}

const EmbeddingTable& JointTrainer::embeddings(Language lang) const {
  return lang == Language::hindi ? *hindi_ : *bengali_;
}

JointStepStats JointTrainer::step(std::span<const CleanExample> hindi_batch,
                                  std::span<const CleanExample> bengali_batch) {
  if (hindi_batch.empty() || bengali_batch.empty())
    throw std::invalid_argument("joint step: both batches must be non-empty");
  check_language(hindi_batch, Language::hindi, "hindi batch");
  check_language(bengali_batch, Language::bengali, "bengali batch");

  const NamedParams params = model_.named_params();
  GradMap grads = zero_grads_like(params);
  JointStepStats stats;

  auto run_batch = [&](std::span<const CleanExample> batch, const EmbeddingTable& table,
                       double& bce_sum, double& pen_sum, std::size_t& correct) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
      AttentionNetCache cache;
      const double p = model_.forward(table.embed(ex.tokens), true, rng_, &cache);
      bce_sum += bce_loss(p, ex.label);
      pen_sum += penalization(cache.attn.a);
      if (predict_label(p) == ex.label) ++correct;
      const double d_pen = hp_.penalization_coeff * inv;
      model_.backward(cache, bce_grad(p, ex.label) * inv, d_pen, grads);
    }
  };

  double bce_h = 0.0, pen_h = 0.0, bce_b = 0.0, pen_b = 0.0;
  std::size_t correct_h = 0, correct_b = 0;
  run_batch(hindi_batch, *hindi_, bce_h, pen_h, correct_h);
  run_batch(bengali_batch, *bengali_, bce_b, pen_b, correct_b);

  stats.count_hindi = hindi_batch.size();
  stats.count_bengali = bengali_batch.size();
  stats.correct_hindi = correct_h;
  stats.correct_bengali = correct_b;
  stats.bce_hindi = bce_h / static_cast<double>(hindi_batch.size());
  stats.bce_bengali = bce_b / static_cast<double>(bengali_batch.size());
  stats.pen_hindi = pen_h / static_cast<double>(hindi_batch.size());
  stats.pen_bengali = pen_b / static_cast<double>(bengali_batch.size());
  stats.joint_loss = stats.bce_hindi + stats.bce_bengali +
                     hp_.penalization_coeff * (stats.pen_hindi + stats.pen_bengali);
  if (!std::isfinite(stats.joint_loss))
    throw std::runtime_error("train_joint: non-finite loss at step " +
                             std::to_string(adam_.steps() + 1));
  adam_.step(params, grads);
  return stats;
}

JointTrainResult JointTrainer::train(const std::vector<CleanExample>& hindi_train,
                                     const std::vector<CleanExample>& hindi_val,
                                     const std::vector<CleanExample>& bengali_train,
                                     const std::vector<CleanExample>& bengali_val,
                                     const TrainOptions& opt) {
  if (hindi_train.empty() || bengali_train.empty())
    throw std::invalid_argument("train_joint: both training sets must be non-empty");

  JointTrainResult result;
  AttentionClassifier best_model = model_;
  double best_acc = -1.0;
  std::size_t best_epoch = 0;

  struct Feed {
    const std::vector<CleanExample>* data;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };
  Feed hindi{&hindi_train, {}, 0};
  Feed bengali{&bengali_train, {}, 0};
  hindi.order.resize(hindi_train.size());
  bengali.order.resize(bengali_train.size());

  auto next_batch = [&](Feed& feed, bool& recycled) -> std::vector<CleanExample> {
    if (feed.cursor >= feed.order.size()) {
      rng_.shuffle(feed.order);
      feed.cursor = 0;
      recycled = true;
    }
    const std::size_t take = std::min(hp_.batch_size, feed.order.size() - feed.cursor);
    std::vector<CleanExample> batch;
    batch.reserve(take);
    for (std::size_t i = 0; i < take; ++i) batch.push_back((*feed.data)[feed.order[feed.cursor++]]);
    return batch;
  };

  const std::size_t longer = std::max(hindi_train.size(), bengali_train.size());
  const std::size_t steps_per_epoch = (longer + hp_.batch_size - 1) / hp_.batch_size;

  for (std::size_t epoch = 1; epoch <= hp_.epochs; ++epoch) {
    std::iota(hindi.order.begin(), hindi.order.end(), 0);
    std::iota(bengali.order.begin(), bengali.order.end(), 0);
    rng_.shuffle(hindi.order);
    rng_.shuffle(bengali.order);
    hindi.cursor = 0;
    bengali.cursor = 0;

    double loss_h = 0.0, loss_b = 0.0;
    std::size_t correct_h = 0, correct_b = 0, seen_h = 0, seen_b = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      bool recycled = false;
      const auto h_batch = next_batch(hindi, recycled);
      const auto b_batch = next_batch(bengali, recycled);
      if (recycled) ++result.recycles;
      const JointStepStats stats = step(h_batch, b_batch);
      result.step_stats.push_back(stats);
      loss_h += stats.bce_hindi + hp_.penalization_coeff * stats.pen_hindi;
      loss_b += stats.bce_bengali + hp_.penalization_coeff * stats.pen_bengali;
      correct_h += stats.correct_hindi;
      correct_b += stats.correct_bengali;
      seen_h += stats.count_hindi;
      seen_b += stats.count_bengali;
    }
    const double steps = static_cast<double>(steps_per_epoch);
    const double train_acc_h = static_cast<double>(correct_h) / static_cast<double>(seen_h);
    const double train_acc_b = static_cast<double>(correct_b) / static_cast<double>(seen_b);
    result.log.push_back({epoch, "train", "hindi", loss_h / steps, train_acc_h});
    result.log.push_back({epoch, "train", "bengali", loss_b / steps, train_acc_b});

    if (!hindi_val.empty() && !bengali_val.empty()) {
      const SplitEval vh = evaluate_split(model_, *hindi_, hindi_val);
      const SplitEval vb = evaluate_split(model_, *bengali_, bengali_val);
      result.log.push_back({epoch, "val", "hindi", vh.loss, vh.accuracy});
      result.log.push_back({epoch, "val", "bengali", vb.loss, vb.accuracy});
      const double mean_acc = 0.5 * (vh.accuracy + vb.accuracy);
      if (mean_acc > best_acc) {
        best_acc = mean_acc;
        best_epoch = epoch;
        best_model = model_;
      }
    } else {
      best_acc = 0.5 * (train_acc_h + train_acc_b);
      best_epoch = epoch;
      best_model = model_;
    }
    result.epochs_run = epoch;
    if (std::min(train_acc_h, train_acc_b) >= opt.early_stop_train_accuracy) break;
  }

  result.best = make_joint_checkpoint(best_model, hp_, *hindi_, *bengali_);
  result.best_val_accuracy = best_acc;
  result.best_epoch = best_epoch;
  return result;
}

JointTrainResult train_joint(const std::vector<CleanExample>& hindi_train,
                             const std::vector<CleanExample>& hindi_val,
                             const std::vector<CleanExample>& bengali_train,
                             const std::vector<CleanExample>& bengali_val,
                             const EmbeddingTable& hindi_embeddings,
                             const EmbeddingTable& bengali_embeddings, const Hyperparams& hp,
                             const TrainOptions& opt) {
  JointTrainer trainer(hindi_embeddings, bengali_embeddings, hp, opt.seed);
  return trainer.train(hindi_train, hindi_val, bengali_train, bengali_val, opt);
}

}  // namespace snet
