// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "snet/numerics.hpp"
#include "snet/text.hpp"

namespace snet {

// Sentinel for tokens absent from the embedding vocabulary; they embed to a
// zero vector at classifier time.
constexpr std::uint32_t kOovIndex = 0xFFFFFFFFu;

class Vocabulary {
 public:
  static Vocabulary build(const std::vector<CleanRecord>& corpus, std::uint64_t min_count = 1);
  static Vocabulary from_counts(const std::vector<std::pair<std::string, std::uint64_t>>& counts);

  std::size_t size() const { return words_.size(); }
  std::optional<std::uint32_t> lookup(const std::string& word) const;
  const std::string& word(std::uint32_t index) const { return words_.at(index); }
  const std::vector<std::string>& words() const { return words_; }
  std::uint64_t count(std::uint32_t index) const { return counts_.at(index); }
  std::uint64_t total_count() const { return total_; }
  // z(w): relative frequency of the word in the corpus.
  double relative_frequency(std::uint32_t index) const;

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Token-index sequence ready for training/evaluation.
struct CleanExample {
  std::string id;
  std::vector<std::uint32_t> tokens;
  int label = 0;
  Language language = Language::hindi;
};

std::vector<CleanExample> encode_records(const std::vector<CleanRecord>& records,
                                         const Vocabulary& vocab);

// P_keep(w) = min(1, (sqrt(z/1e-6) + 1) * (1e-6 / z)); z must be in (0, 1].
double keep_probability(double z);

struct SkipGramPair {
  std::uint32_t center = 0;
  std::uint32_t context = 0;
};

// One (center, context) pair per in-window context occurrence that survives
// subsampling: kept iff uniform(0,1) < P_keep(z(context)). Pairs with an OOV
// side are skipped. Built once per run, not per epoch.
std::vector<SkipGramPair> generate_pairs(const std::vector<CleanExample>& corpus,
                                         std::size_t window, const Vocabulary& vocab,
                                         RngState& rng);

struct Word2VecHyperparams {
  std::size_t epochs = 500;
  std::size_t window = 2;
  std::size_t dim = 300;
  std::size_t batch_size = 512;
  double learning_rate = 0.05;
};

struct Word2VecModel {
  Matrix input;   // V x d embedding table
  Matrix output;  // d x V projection
};

struct Word2VecResult {
  Word2VecModel model;
  std::vector<double> epoch_loss;  // mean per-pair cross entropy
};

// Skip-gram with a full-softmax cross entropy over the vocabulary, Adam.
Word2VecResult train_word2vec(const std::vector<SkipGramPair>& pairs, std::size_t vocab_size,
                              const Word2VecHyperparams& hp, RngState& rng);

// Mean per-pair cross entropy under the current parameters.
double word2vec_loss(const Word2VecModel& model, const std::vector<SkipGramPair>& pairs);

// Top-k rows of the input embedding by cosine similarity, query excluded.
std::vector<std::pair<std::string, double>> nearest_neighbors(const Word2VecModel& model,
                                                              const Vocabulary& vocab,
                                                              const std::string& word,
                                                              std::size_t k);

struct EmbeddingTable {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> index;
  Matrix vectors;  // V x d

  static EmbeddingTable from_word2vec(const Word2VecModel& model, const Vocabulary& vocab);
  // Text format: first line "V d", then one "word v1 ... vd" line per word.
  static EmbeddingTable load_text(const std::string& path);
  void save_text(const std::string& path) const;

  std::size_t dim() const { return vectors.cols; }
  std::optional<std::uint32_t> lookup(const std::string& word) const;
  // Fingerprint over dims, words and raw float bits; ties checkpoints to the
  // exact table they were trained with.
  std::uint64_t fingerprint() const;
  // n x d matrix of token vectors; OOV rows are zero.
  Matrix embed(const std::vector<std::uint32_t>& tokens) const;
};

std::vector<CleanExample> encode_records(const std::vector<CleanRecord>& records,
                                         const EmbeddingTable& table);

void write_loss_csv(const std::string& path, const std::vector<double>& epoch_loss);

}  // namespace snet
