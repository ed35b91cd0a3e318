// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "snet/embeddings.hpp"

using namespace snet;

namespace {

std::vector<CleanRecord> toy_corpus(const std::vector<std::vector<std::string>>& docs) {
  std::vector<CleanRecord> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    out.push_back({std::to_string(i), docs[i], 0, Language::hindi});
  return out;
}

}  // namespace

TEST_CASE("vocabulary frequencies sum to 1 and indices are dense") {
  auto corpus = toy_corpus({{"a", "b", "a"}, {"c", "a"}});
  Vocabulary vocab = Vocabulary::build(corpus);
  REQUIRE(vocab.size() == 3);
  CHECK(vocab.lookup("a").value() == 0);
  CHECK(vocab.lookup("b").value() == 1);
  CHECK(vocab.lookup("c").value() == 2);
  CHECK_FALSE(vocab.lookup("zzz").has_value());
  double z_sum = 0.0;
  for (std::uint32_t i = 0; i < vocab.size(); ++i) z_sum += vocab.relative_frequency(i);
  CHECK(std::abs(z_sum - 1.0) <= 1e-9);
  CHECK(vocab.relative_frequency(0) == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("keep_probability matches the subsampling formula") {
  // At the threshold: (sqrt(1) + 1) * 1 = 2, clamped to 1.
  CHECK(keep_probability(1e-6) == doctest::Approx(1.0));
  // (sqrt(100) + 1) * 0.01 = 0.11
  CHECK(std::abs(keep_probability(1e-4) - 0.11) < 1e-12);
  // (sqrt(10000) + 1) * 1e-4 = 0.0101
  CHECK(std::abs(keep_probability(1e-2) - 0.0101) < 1e-12);
  CHECK_THROWS_AS(keep_probability(0.0), std::invalid_argument);
  CHECK_THROWS_AS(keep_probability(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(keep_probability(1.5), std::invalid_argument);
}

TEST_CASE("keep_probability decreases monotonically in z") {
  double prev = keep_probability(1.1e-6);
  for (double z = 2e-6; z <= 1.0; z *= 1.37) {
    const double cur = keep_probability(z);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

// A dominant filler count makes the probe words rare enough that P_keep
// clamps to exactly 1 (needs z <= ~2.6e-6); pairs are then never subsampled.
constexpr std::uint64_t kHeavyFiller = 50000000;

TEST_CASE("generate_pairs enumerates every windowed pair when nothing drops") {
  Vocabulary vocab =
      Vocabulary::from_counts({{"a", 1}, {"b", 1}, {"c", 1}, {"f", kHeavyFiller}});
  REQUIRE(keep_probability(vocab.relative_frequency(vocab.lookup("a").value())) == 1.0);

  std::vector<CleanRecord> probe{{"probe", {"a", "b", "c"}, 0, Language::hindi}};
  auto encoded = encode_records(probe, vocab);
  RngState rng(123);
  auto pairs = generate_pairs(encoded, 2, vocab, rng);
  const std::uint32_t a = vocab.lookup("a").value();
  const std::uint32_t b = vocab.lookup("b").value();
  const std::uint32_t c = vocab.lookup("c").value();
  REQUIRE(pairs.size() == 6);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> expected = {
      {a, b}, {a, c}, {b, a}, {b, c}, {c, a}, {c, b}};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(pairs[i].center == expected[i].first);
    CHECK(pairs[i].context == expected[i].second);
  }
}

TEST_CASE("generate_pairs drops a context whose keep probability is ~0") {
  // z(b) ~ 1 gives P_keep(b) ~ 1e-3 while z(a) is tiny so P_keep(a) = 1;
  // over [a, b] with window 1 only (b, a) survives for almost every seed.
  Vocabulary vocab = Vocabulary::from_counts({{"a", 1}, {"b", kHeavyFiller}});
  std::vector<CleanRecord> probe{{"probe", {"a", "b"}, 0, Language::hindi}};
  auto encoded = encode_records(probe, vocab);
  RngState rng(99);
  auto pairs = generate_pairs(encoded, 1, vocab, rng);
  const std::uint32_t a = vocab.lookup("a").value();
  const std::uint32_t b = vocab.lookup("b").value();
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].center == b);
  CHECK(pairs[0].context == a);
}

TEST_CASE("generate_pairs pair-count property and window clipping") {
  // Window pairs available per position i: min(window, left) + min(window, right).
  auto corpus = toy_corpus({{"a", "b", "c", "d", "a"}, {"b", "c"}});
  Vocabulary vocab = Vocabulary::build(corpus);
  auto encoded = encode_records(corpus, vocab);
  const std::size_t window = 2;
  std::size_t expected_candidates = 0;
  for (const auto& ex : encoded) {
    const std::size_t n = ex.tokens.size();
    for (std::size_t i = 0; i < n; ++i)
      expected_candidates += std::min(window, i) + std::min(window, n - 1 - i);
  }
  // Every candidate consumes exactly one uniform draw, kept or not.
  RngState rng(7);
  const std::uint64_t pos_before = rng.position;
  auto pairs = generate_pairs(encoded, window, vocab, rng);
  CHECK(rng.position - pos_before == expected_candidates);
  CHECK(pairs.size() <= expected_candidates);
}

TEST_CASE("monte carlo retention matches keep_probability within 2%") {
  // One word with z = 0.5: corpus of two words, equal counts.
  auto corpus = toy_corpus({{"x", "y"}});
  Vocabulary vocab = Vocabulary::build(corpus);
  const double expected = keep_probability(0.5);

  // 1e5 independent generate_pairs runs over a 2-token doc yield 2 candidate
  // draws each; count how often context "y" survives for center "x".
  auto encoded = encode_records(corpus, vocab);
  RngState rng(2024);
  std::size_t kept = 0, trials = 100000;
  for (std::size_t t = 0; t < trials; ++t) {
    auto pairs = generate_pairs(encoded, 1, vocab, rng);
    for (const auto& p : pairs)
      if (p.center == 0 && p.context == 1) ++kept;
  }
  const double rate = static_cast<double>(kept) / static_cast<double>(trials);
  CHECK(std::abs(rate - expected) <= 0.02);
  // The absolute bound is loose for a ~1.4e-3 probability; also require
  // binomial-scale agreement.
  CHECK(rate > 0.5 * expected);
  CHECK(rate < 2.0 * expected);
}

TEST_CASE("word2vec loss on uniform logits is ln V") {
  Word2VecModel model;
  model.input = Matrix(4, 8);
  model.output = Matrix(8, 4);  // all zeros -> uniform softmax
  std::vector<SkipGramPair> pairs = {{0, 1}, {2, 3}};
  CHECK(std::abs(word2vec_loss(model, pairs) - std::log(4.0)) < 1e-3);
}

TEST_CASE("word2vec training: descent, planted structure, determinism") {
  // Planted structure: x and y share the exclusive context c, a and b share
  // d. Trained input embeddings should place y nearest to x by cosine. The
  // heavy filler keeps every probe P_keep at 1 so no pair is subsampled away.
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 30; ++i) {
    docs.push_back({"x", "c"});
    docs.push_back({"y", "c"});
    docs.push_back({"a", "d"});
    docs.push_back({"b", "d"});
  }
  auto corpus = toy_corpus(docs);
  Vocabulary vocab = Vocabulary::from_counts({{"x", 30},
                                              {"c", 60},
                                              {"y", 30},
                                              {"a", 30},
                                              {"d", 60},
                                              {"b", 30},
                                              {"f", kHeavyFiller}});
  auto encoded = encode_records(corpus, vocab);
  RngState rng(5);
  auto pairs = generate_pairs(encoded, 1, vocab, rng);
  REQUIRE(pairs.size() == 240);  // nothing subsampled

  Word2VecHyperparams hp;
  hp.epochs = 50;
  hp.dim = 16;
  hp.batch_size = 32;
  hp.learning_rate = 0.05;
  RngState train_rng(6);
  auto result = train_word2vec(pairs, vocab.size(), hp, train_rng);
  REQUIRE(result.epoch_loss.size() == 50);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());

  auto neighbors = nearest_neighbors(result.model, vocab, "x", 1);
  REQUIRE(neighbors.size() == 1);
  CHECK(neighbors[0].first == "y");

  // Smoothed (10-epoch moving average) loss is non-increasing on this corpus,
  // up to optimizer noise at the entropy floor (1% of the total descent).
  const auto& loss = result.epoch_loss;
  auto avg = [&](std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = hi - 10; i < hi; ++i) s += loss[i];
    return s / 10.0;
  };
  const double slack = 0.01 * (loss.front() - loss.back());
  for (std::size_t hi = 20; hi <= loss.size(); hi += 10) CHECK(avg(hi) <= avg(hi - 10) + slack);

  // Same seeds, same bytes (bitwise, not just value-equal).
  RngState rng_b(5);
  auto pairs_b = generate_pairs(encoded, 1, vocab, rng_b);
  RngState train_rng_b(6);
  auto result_b = train_word2vec(pairs_b, vocab.size(), hp, train_rng_b);
  REQUIRE(result.model.input.size() == result_b.model.input.size());
  CHECK(std::memcmp(result.model.input.data.data(), result_b.model.input.data.data(),
                    result.model.input.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(result.model.output.data.data(), result_b.model.output.data.data(),
                    result.model.output.size() * sizeof(float)) == 0);
}

TEST_CASE("smaller windows converge lower on an alternating corpus") {
  // "a b a b a b" makes window-1 contexts deterministic while window-2 mixes
  // in same-word contexts, so the window-1 model reaches a lower final loss.
  auto corpus = toy_corpus({{"a", "b", "a", "b", "a", "b"}});
  Vocabulary vocab = Vocabulary::from_counts({{"a", 3}, {"b", 3}, {"f", kHeavyFiller}});
  auto encoded = encode_records(corpus, vocab);

  Word2VecHyperparams hp;
  hp.epochs = 120;
  hp.dim = 8;
  hp.batch_size = 64;
  auto run = [&](std::size_t window) {
    RngState rng(11);
    auto pairs = generate_pairs(encoded, window, vocab, rng);
    RngState train_rng(12);
    return train_word2vec(pairs, vocab.size(), hp, train_rng).epoch_loss.back();
  };
  CHECK(run(1) < run(2));
}

TEST_CASE("nearest_neighbors contracts") {
  auto corpus = toy_corpus({{"p", "q", "r"}});
  Vocabulary vocab = Vocabulary::build(corpus);
  Word2VecModel model;
  model.input = Matrix(3, 4);
  // p and q identical rows, r orthogonal.
  model.input(0, 0) = 1.0f;
  model.input(1, 0) = 1.0f;
  model.input(2, 1) = 1.0f;
  model.output = Matrix(4, 3);

  auto nn = nearest_neighbors(model, vocab, "p", 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].first == "q");  // query itself excluded
  CHECK(nn[0].second == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(nn[1].second == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_THROWS_AS(nearest_neighbors(model, vocab, "missing", 1), std::out_of_range);
  CHECK_THROWS_AS(nearest_neighbors(model, vocab, "p", 3), std::invalid_argument);
}

TEST_CASE("embedding table text round trip and fingerprint") {
  auto corpus = toy_corpus({{"alpha", "beta"}});
  Vocabulary vocab = Vocabulary::build(corpus);
  Word2VecModel model;
  RngState rng(19);
  model.input = init_uniform_xavier(2, 5, rng);
  model.output = init_uniform_xavier(5, 2, rng);
  EmbeddingTable table = EmbeddingTable::from_word2vec(model, vocab);

  const std::string dir = "snet_test_tmp_embed";
  std::filesystem::create_directories(dir);
  table.save_text(dir + "/emb.vec");
  EmbeddingTable loaded = EmbeddingTable::load_text(dir + "/emb.vec");
  CHECK(loaded.words == table.words);
  CHECK(loaded.vectors.data == table.vectors.data);  // %.9g round-trips floats
  CHECK(loaded.fingerprint() == table.fingerprint());

  EmbeddingTable other = table;
  other.vectors(0, 0) += 1.0f;
  CHECK(other.fingerprint() != table.fingerprint());

  // OOV tokens embed to zero rows.
  Matrix t = table.embed({0, kOovIndex});
  CHECK(t.rows == 2);
  for (std::size_t j = 0; j < t.cols; ++j) CHECK(t(1, j) == 0.0f);

  CHECK_THROWS_AS(EmbeddingTable::load_text(dir + "/none.vec"), IoError);
  std::filesystem::remove_all(dir);
}
