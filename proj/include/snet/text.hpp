// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "snet/numerics.hpp"

namespace snet {

enum class Language { hindi, bengali };

std::string to_string(Language lang);
Language parse_language(std::string_view name);

// File problems (open/read/stat) carry their own type so the CLI can map
// them to a distinct exit code.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Minimal UTF-8 handling; malformed bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string utf8_encode(std::u32string_view cps);

struct EmojiBlocks {
  std::vector<std::pair<char32_t, char32_t>> ranges;  // inclusive

  static EmojiBlocks defaults();
  // "1F300-1FAFF,2600-27BF" style override string.
  static EmojiBlocks parse(std::string_view text);
  bool contains(char32_t cp) const;
};

struct TokenizerConfig {
  std::unordered_set<std::string> stop_words;
  EmojiBlocks emoji = EmojiBlocks::defaults();
};

std::unordered_set<std::string> load_stop_words(const std::string& path);  // one word per line

// Lowercases, drops @usernames / punctuation / stop-words, keeps '#'-prefixed
// hashtags and emoji code points as standalone tokens.
std::vector<std::string> normalize_and_tokenize(std::string_view body, const TokenizerConfig& cfg);

struct LabelMap {
  std::string positive;  // maps to 1 (hate / offensive)
  std::string negative;  // maps to 0

  static LabelMap defaults_for(Language lang);  // hindi: HOF/NOT, bengali: 1/0
  int to_bit(const std::string& label) const;   // throws on unknown label
};

struct RawRecord {
  std::string id;
  std::string body;
  std::string label;
  Language language = Language::hindi;
};

// Tokenized record; token indices are assigned later, against a vocabulary.
struct CleanRecord {
  std::string id;
  std::vector<std::string> tokens;
  int label = 0;
  Language language = Language::hindi;
};

struct CleanResult {
  std::vector<CleanRecord> records;
  std::size_t dropped_empty = 0;  // records whose body cleaned to zero tokens
};

CleanResult clean_records(const std::vector<RawRecord>& records, const TokenizerConfig& cfg,
                          const LabelMap& labels);

struct CorpusStats {
  // token -> {count in label-1 records, count in label-0 records}
  std::map<std::string, std::array<std::uint64_t, 2>> emoji_counts;
  std::map<std::string, std::array<std::uint64_t, 2>> hashtag_counts;
  std::array<std::uint64_t, 2> class_totals{{0, 0}};

  std::uint64_t total_emojis() const;
  std::uint64_t emojis_in_class(int bit) const;
  std::uint64_t total_records() const { return class_totals[0] + class_totals[1]; }
  double proportion(int bit) const;
};

// Emoji occurrences per class, scanned over the raw bodies.
CorpusStats extract_emojis(const std::vector<RawRecord>& records, const EmojiBlocks& blocks,
                           const LabelMap& labels);

// Emojis plus hashtags (from tokenization) plus class totals.
CorpusStats collect_stats(const std::vector<RawRecord>& records, const TokenizerConfig& cfg,
                          const LabelMap& labels);

std::string stats_to_json(const CorpusStats& stats, std::size_t dropped_empty);

// Exactly per_class records of each class, deterministically shuffled.
std::vector<RawRecord> balanced_subsample(const std::vector<RawRecord>& records,
                                          std::size_t per_class, const LabelMap& labels,
                                          RngState& rng);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + val + test; }
};

template <typename R>
struct SplitParts {
  std::vector<R> train;
  std::vector<R> val;
  std::vector<R> test;
  std::vector<R> leftover;  // reported, never silently dropped
};

template <typename R>
SplitParts<R> split(const std::vector<R>& records, const SplitSizes& sizes, RngState& rng) {
  if (sizes.total() > records.size())
    throw std::invalid_argument("split sizes sum to " + std::to_string(sizes.total()) +
                                " but corpus has " + std::to_string(records.size()) + " records");
  std::vector<R> pool = records;
  rng.shuffle(pool);
  SplitParts<R> result;
  auto it = pool.begin();
  result.train.assign(it, it + static_cast<long>(sizes.train));
  it += static_cast<long>(sizes.train);
  result.val.assign(it, it + static_cast<long>(sizes.val));
  it += static_cast<long>(sizes.val);
  result.test.assign(it, it + static_cast<long>(sizes.test));
  it += static_cast<long>(sizes.test);
  result.leftover.assign(it, pool.end());
  return result;
}

using SplitResult = SplitParts<RawRecord>;

// TSV: id <TAB> text <TAB> label. Throws IoError / std::invalid_argument.
std::vector<RawRecord> read_raw_tsv(const std::string& path, Language lang, bool has_header);

// TSV: id <TAB> space-joined tokens <TAB> {0,1} <TAB> {hindi,bengali}.
void write_clean_tsv(const std::string& path, const std::vector<CleanRecord>& records);
std::vector<CleanRecord> read_clean_tsv(const std::string& path);

}  // namespace snet
