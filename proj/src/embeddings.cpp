// SPDX-License-Identifier: Apache-2.0
#include "snet/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "snet/optim.hpp"

namespace snet {

Vocabulary Vocabulary::build(const std::vector<CleanRecord>& corpus, std::uint64_t min_count) {
  // First pass: counts in first-occurrence order.
  Vocabulary raw;
  for (const auto& rec : corpus) {
    for (const auto& tok : rec.tokens) {
      auto [it, inserted] = raw.index_.try_emplace(tok, static_cast<std::uint32_t>(raw.words_.size()));
      if (inserted) {
        raw.words_.push_back(tok);
        raw.counts_.push_back(0);
      }
      ++raw.counts_[it->second];
      ++raw.total_;
    }
  }
  if (min_count <= 1) return raw;

  Vocabulary pruned;
  for (std::uint32_t i = 0; i < raw.words_.size(); ++i) {
    if (raw.counts_[i] < min_count) continue;
    pruned.index_.emplace(raw.words_[i], static_cast<std::uint32_t>(pruned.words_.size()));
    pruned.words_.push_back(raw.words_[i]);
    pruned.counts_.push_back(raw.counts_[i]);
    pruned.total_ += raw.counts_[i];
  }
  return pruned;
}

Vocabulary Vocabulary::from_counts(
    const std::vector<std::pair<std::string, std::uint64_t>>& counts) {
  Vocabulary vocab;
  for (const auto& [word, count] : counts) {
    if (count == 0) throw std::invalid_argument("Vocabulary::from_counts: zero count for " + word);
    if (!vocab.index_.emplace(word, static_cast<std::uint32_t>(vocab.words_.size())).second)
      throw std::invalid_argument("Vocabulary::from_counts: duplicate word " + word);
    vocab.words_.push_back(word);
    vocab.counts_.push_back(count);
    vocab.total_ += count;
  }
  return vocab;
}

std::optional<std::uint32_t> Vocabulary::lookup(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::relative_frequency(std::uint32_t index) const {
  return static_cast<double>(counts_.at(index)) / static_cast<double>(total_);
}

std::vector<CleanExample> encode_records(const std::vector<CleanRecord>& records,
                                         const Vocabulary& vocab) {
  std::vector<CleanExample> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    CleanExample ex{rec.id, {}, rec.label, rec.language};
    ex.tokens.reserve(rec.tokens.size());
    for (const auto& tok : rec.tokens) ex.tokens.push_back(vocab.lookup(tok).value_or(kOovIndex));
    out.push_back(std::move(ex));
  }
  return out;
}

double keep_probability(double z) {
  if (z <= 0.0 || z > 1.0) throw std::invalid_argument("keep_probability: z must be in (0, 1]");
  constexpr double kThreshold = 1e-6;
  const double p = (std::sqrt(z / kThreshold) + 1.0) * (kThreshold / z);
  return std::min(1.0, p);
}

std::vector<SkipGramPair> generate_pairs(const std::vector<CleanExample>& corpus,
                                         std::size_t window, const Vocabulary& vocab,
                                         RngState& rng) {
  if (window == 0) throw std::invalid_argument("generate_pairs: window must be >= 1");
  // Precompute one keep probability per vocabulary entry.
  std::vector<double> keep(vocab.size());
  for (std::uint32_t i = 0; i < vocab.size(); ++i)
    keep[i] = keep_probability(vocab.relative_frequency(i));

  std::vector<SkipGramPair> pairs;
  for (const auto& ex : corpus) {
    const auto& toks = ex.tokens;
    const std::size_t n = toks.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(n - 1, i + window);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        const double threshold = rng.uniform();  // drawn for every candidate
        if (toks[i] == kOovIndex || toks[j] == kOovIndex) continue;
        if (threshold < keep[toks[j]]) pairs.push_back({toks[i], toks[j]});
      }
    }
  }
  return pairs;
}

namespace {

// Cross entropy and gradient for one pair under a full softmax over V.
// Returns -log p(context | center); dlogits holds p - onehot(context).
double pair_loss(const Word2VecModel& model, const SkipGramPair& pair, std::vector<double>& logits,
                 std::vector<double>* dlogits) {
  const std::size_t v = model.input.rows;
  const std::size_t d = model.input.cols;
  std::fill(logits.begin(), logits.end(), 0.0);
  const float* e = model.input.row_ptr(pair.center);
  for (std::size_t k = 0; k < d; ++k) {
    const double ek = static_cast<double>(e[k]);
    const float* orow = model.output.row_ptr(k);
    for (std::size_t j = 0; j < v; ++j) logits[j] += ek * static_cast<double>(orow[j]);
  }
  double mx = logits[0];
  for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, logits[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < v; ++j) sum += std::exp(logits[j] - mx);
  const double log_sum = std::log(sum) + mx;
  const double loss = log_sum - logits[pair.context];
  if (dlogits) {
    for (std::size_t j = 0; j < v; ++j) (*dlogits)[j] = std::exp(logits[j] - log_sum);
    (*dlogits)[pair.context] -= 1.0;
  }
  return loss;
}

}  // namespace

double word2vec_loss(const Word2VecModel& model, const std::vector<SkipGramPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("word2vec_loss: no pairs");
  std::vector<double> logits(model.input.rows);
  double total = 0.0;
  for (const auto& pair : pairs) total += pair_loss(model, pair, logits, nullptr);
  return total / static_cast<double>(pairs.size());
}

Word2VecResult train_word2vec(const std::vector<SkipGramPair>& pairs, std::size_t vocab_size,
                              const Word2VecHyperparams& hp, RngState& rng) {
  if (vocab_size < 2) throw std::invalid_argument("train_word2vec: vocabulary size must be >= 2");
  if (pairs.empty()) throw std::invalid_argument("train_word2vec: no training pairs");
  for (const auto& p : pairs)
    if (p.center >= vocab_size || p.context >= vocab_size)
      throw std::invalid_argument("train_word2vec: pair index out of range");

  Word2VecResult result;
  result.model.input = init_uniform_xavier(vocab_size, hp.dim, rng);
  result.model.output = init_uniform_xavier(hp.dim, vocab_size, rng);

  AdamState adam(AdamConfig{hp.learning_rate, 0.9, 0.999, 1e-8});
  NamedParams params{{"w2v.input", &result.model.input}, {"w2v.output", &result.model.output}};

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> logits(vocab_size), dlogits(vocab_size), dcenter(hp.dim);
  GradMap grads;
  MatrixD& d_input = grad_slot(grads, "w2v.input", vocab_size, hp.dim);
  MatrixD& d_output = grad_slot(grads, "w2v.output", hp.dim, vocab_size);
  std::vector<std::uint32_t> touched_rows;

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hp.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      for (std::uint32_t row : touched_rows)
        std::fill(d_input.row_ptr(row), d_input.row_ptr(row) + hp.dim, 0.0);
      touched_rows.clear();
      d_output.zero();

      for (std::size_t b = start; b < stop; ++b) {
        const SkipGramPair& pair = pairs[order[b]];
        epoch_total += pair_loss(result.model, pair, logits, &dlogits);
        const float* e = result.model.input.row_ptr(pair.center);
        double* din = d_input.row_ptr(pair.center);
        if (din[0] == 0.0) touched_rows.push_back(pair.center);  // may repeat; refill is idempotent
        std::fill(dcenter.begin(), dcenter.end(), 0.0);
        for (std::size_t k = 0; k < hp.dim; ++k) {
          const double ek = static_cast<double>(e[k]);
          const float* orow = result.model.output.row_ptr(k);
          double* dorow = d_output.row_ptr(k);
          double s = 0.0;
          for (std::size_t j = 0; j < vocab_size; ++j) {
            const double dj = dlogits[j] * inv_batch;
            dorow[j] += ek * dj;
            s += dj * static_cast<double>(orow[j]);
          }
          dcenter[k] = s;
        }
        for (std::size_t k = 0; k < hp.dim; ++k) din[k] += dcenter[k];
      }
      adam.step(params, grads);
    }
    const double mean = epoch_total / static_cast<double>(order.size());
    if (!std::isfinite(mean))
      throw std::runtime_error("train_word2vec: non-finite loss at epoch " +
                               std::to_string(epoch + 1));
    result.epoch_loss.push_back(mean);
  }
  return result;
}

namespace {

double cosine(const float* a, const float* b, std::size_t d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    dot += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    na += static_cast<double>(a[k]) * static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]) * static_cast<double>(b[k]);
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom == 0.0 ? 0.0 : dot / denom;
}

}  // namespace

std::vector<std::pair<std::string, double>> nearest_neighbors(const Word2VecModel& model,
                                                              const Vocabulary& vocab,
                                                              const std::string& word,
                                                              std::size_t k) {
  const auto query = vocab.lookup(word);
  if (!query) throw std::out_of_range("nearest_neighbors: word not in vocabulary: " + word);
  if (k >= vocab.size())
    throw std::invalid_argument("nearest_neighbors: k must be smaller than the vocabulary");

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(vocab.size() - 1);
  const float* q = model.input.row_ptr(*query);
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    if (i == *query) continue;
    scored.emplace_back(vocab.word(i), cosine(q, model.input.row_ptr(i), model.input.cols));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  scored.resize(k);
  return scored;
}

EmbeddingTable EmbeddingTable::from_word2vec(const Word2VecModel& model, const Vocabulary& vocab) {
  EmbeddingTable table;
  table.words = vocab.words();
  for (std::uint32_t i = 0; i < table.words.size(); ++i) table.index.emplace(table.words[i], i);
  table.vectors = model.input;
  return table;
}

EmbeddingTable EmbeddingTable::load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::size_t v = 0, d = 0;
  if (!(in >> v >> d) || v == 0 || d == 0)
    throw std::invalid_argument(path + ": bad embedding header (expected 'V d')");
  EmbeddingTable table;
  table.words.reserve(v);
  table.vectors = Matrix(v, d);
  for (std::size_t i = 0; i < v; ++i) {
    std::string word;
    if (!(in >> word)) throw std::invalid_argument(path + ": truncated embedding file");
    float* row = table.vectors.row_ptr(i);
    for (std::size_t k = 0; k < d; ++k)
      if (!(in >> row[k])) throw std::invalid_argument(path + ": truncated embedding row for " + word);
    table.index.emplace(word, static_cast<std::uint32_t>(i));
    table.words.push_back(std::move(word));
  }
  if (table.index.size() != v) throw std::invalid_argument(path + ": duplicate word in embedding file");
  return table;
}

void EmbeddingTable::save_text(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out << words.size() << ' ' << dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << words[i];
    const float* row = vectors.row_ptr(i);
    for (std::size_t k = 0; k < dim(); ++k) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(row[k]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing embedding file: " + path);
}

std::optional<std::uint32_t> EmbeddingTable::lookup(const std::string& word) const {
  const auto it = index.find(word);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::uint64_t EmbeddingTable::fingerprint() const {
  std::uint64_t h = fnv1a(&vectors.rows, sizeof vectors.rows);
  h = fnv1a(&vectors.cols, sizeof vectors.cols, h);
  for (const auto& w : words) {
    h = fnv1a(w.data(), w.size(), h);
    h = fnv1a("\n", 1, h);
  }
  h = fnv1a(vectors.data.data(), vectors.data.size() * sizeof(float), h);
  return h;
}

Matrix EmbeddingTable::embed(const std::vector<std::uint32_t>& tokens) const {
  Matrix out(tokens.size(), dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] == kOovIndex) continue;  // zero row
    const float* src = vectors.row_ptr(tokens[t]);
    std::copy(src, src + dim(), out.row_ptr(t));
  }
  return out;
}

std::vector<CleanExample> encode_records(const std::vector<CleanRecord>& records,
                                         const EmbeddingTable& table) {
  std::vector<CleanExample> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    CleanExample ex{rec.id, {}, rec.label, rec.language};
    ex.tokens.reserve(rec.tokens.size());
    for (const auto& tok : rec.tokens) ex.tokens.push_back(table.lookup(tok).value_or(kOovIndex));
    out.push_back(std::move(ex));
  }
  return out;
}

void write_loss_csv(const std::string& path, const std::vector<double>& epoch_loss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write loss trace: " + path);
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, epoch_loss[i]);
    out << buf;
  }
}

}  // namespace snet
