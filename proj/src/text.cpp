// SPDX-License-Identifier: Apache-2.0
#include "snet/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace snet {

std::string to_string(Language lang) {
  return lang == Language::hindi ? "hindi" : "bengali";
}

Language parse_language(std::string_view name) {
  if (name == "hindi") return Language::hindi;
  if (name == "bengali") return Language::bengali;
  throw std::invalid_argument("unknown language: " + std::string(name));
}

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char bk = static_cast<unsigned char>(s[i + k]);
      if ((bk & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (bk & 0x3F);
    }
    if (!ok || cp > 0x10FFFF) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string utf8_encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

EmojiBlocks EmojiBlocks::defaults() {
  EmojiBlocks b;
  b.ranges = {
      {0x1F300, 0x1FAFF},  // pictographs, emoticons, supplemental symbols
      {0x2600, 0x27BF},    // misc symbols + dingbats
      {0x1F1E6, 0x1F1FF},  // regional indicators (flags)
  };
  return b;
}

EmojiBlocks EmojiBlocks::parse(std::string_view text) {
  EmojiBlocks b;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos)
      throw std::invalid_argument("emoji block range must be LO-HI hex: " + item);
    const char32_t lo = static_cast<char32_t>(std::stoul(item.substr(0, dash), nullptr, 16));
    const char32_t hi = static_cast<char32_t>(std::stoul(item.substr(dash + 1), nullptr, 16));
    if (hi < lo) throw std::invalid_argument("emoji block range reversed: " + item);
    b.ranges.emplace_back(lo, hi);
  }
  if (b.ranges.empty()) throw std::invalid_argument("emoji block list is empty");
  return b;
}

bool EmojiBlocks::contains(char32_t cp) const {
  for (const auto& [lo, hi] : ranges)
    if (cp >= lo && cp <= hi) return true;
  return false;
}

std::unordered_set<std::string> load_stop_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stop-word list: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

namespace {

constexpr char32_t kVariationSelector = 0xFE0F;
constexpr char32_t kZeroWidthJoiner = 0x200D;

bool is_format_cp(char32_t cp) {
  return cp == kVariationSelector || cp == kZeroWidthJoiner || cp == 0x200C || cp == 0xFEFF;
}

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x200B:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    if (c == '_' ) return false;  // word character
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
           (c >= '{' && c <= '~');
  }
  if (cp == 0x0964 || cp == 0x0965) return true;  // danda, double danda
  if (cp >= 0x2010 && cp <= 0x2027) return true;  // dashes, quotes, ellipsis
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  if (cp == 0x00A1 || cp == 0x00BF || cp == 0x00AB || cp == 0x00BB) return true;
  return false;
}

bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }

char32_t ascii_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  return cp;
}

bool is_word_cp(char32_t cp, const EmojiBlocks& emoji) {
  return !is_space_cp(cp) && !is_punct_cp(cp) && !emoji.contains(cp) && !is_format_cp(cp);
}

}  // namespace

std::vector<std::string> normalize_and_tokenize(std::string_view body, const TokenizerConfig& cfg) {
  const std::u32string cps = utf8_decode(body);
  std::vector<std::string> tokens;
  std::string cur;
  bool skipping_username = false;

  auto emit = [&](std::string tok) {
    if (!tok.empty() && cfg.stop_words.find(tok) == cfg.stop_words.end())
      tokens.push_back(std::move(tok));
  };
  auto flush = [&] {
    if (!cur.empty()) {
      emit(std::move(cur));
      cur.clear();
    }
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_space_cp(cp)) {
      flush();
      skipping_username = false;
      continue;
    }
    if (skipping_username) continue;
    if (cfg.emoji.contains(cp)) {
      flush();
      std::string tok;
      append_utf8(tok, cp);
      if (is_regional_indicator(cp) && i + 1 < cps.size() && is_regional_indicator(cps[i + 1])) {
        append_utf8(tok, cps[i + 1]);  // keep flag pairs whole
        ++i;
      }
      // Variation selectors attach; ZWJ glues composite emoji into one token.
      while (i + 1 < cps.size()) {
        if (cps[i + 1] == kVariationSelector) {
          append_utf8(tok, cps[i + 1]);
          ++i;
        } else if (cps[i + 1] == kZeroWidthJoiner && i + 2 < cps.size() &&
                   cfg.emoji.contains(cps[i + 2])) {
          append_utf8(tok, cps[i + 1]);
          append_utf8(tok, cps[i + 2]);
          i += 2;
        } else {
          break;
        }
      }
      emit(std::move(tok));
      continue;
    }
    if (cp == U'@') {
      if (cur.empty()) skipping_username = true;  // drop the whole @username token
      continue;
    }
    if (cp == U'#') {
      // Kept only when it prefixes a word.
      if (cur.empty() && i + 1 < cps.size() && is_word_cp(cps[i + 1], cfg.emoji) &&
          cps[i + 1] != U'#')
        cur.push_back('#');
      continue;
    }
    if (is_format_cp(cp) || is_punct_cp(cp)) continue;
    append_utf8(cur, ascii_lower(cp));
  }
  flush();
  return tokens;
}

LabelMap LabelMap::defaults_for(Language lang) {
  if (lang == Language::hindi) return {"HOF", "NOT"};
  return {"1", "0"};
}

int LabelMap::to_bit(const std::string& label) const {
  if (label == positive) return 1;
  if (label == negative) return 0;
  throw std::invalid_argument("unknown label '" + label + "' (expected '" + positive + "' or '" +
                              negative + "')");
}

CleanResult clean_records(const std::vector<RawRecord>& records, const TokenizerConfig& cfg,
                          const LabelMap& labels) {
  CleanResult result;
  result.records.reserve(records.size());
  for (const auto& rec : records) {
    std::vector<std::string> tokens = normalize_and_tokenize(rec.body, cfg);
    if (tokens.empty()) {
      ++result.dropped_empty;
      continue;
    }
    result.records.push_back({rec.id, std::move(tokens), labels.to_bit(rec.label), rec.language});
  }
  return result;
}

std::uint64_t CorpusStats::total_emojis() const {
  std::uint64_t total = 0;
  for (const auto& [tok, counts] : emoji_counts) total += counts[0] + counts[1];
  return total;
}

std::uint64_t CorpusStats::emojis_in_class(int bit) const {
  std::uint64_t total = 0;
  const std::size_t slot = bit == 1 ? 0 : 1;
  for (const auto& [tok, counts] : emoji_counts) total += counts[slot];
  return total;
}

double CorpusStats::proportion(int bit) const {
  const std::uint64_t total = total_records();
  if (total == 0) return 0.0;
  return static_cast<double>(class_totals[bit == 1 ? 0 : 1]) / static_cast<double>(total);
}

CorpusStats extract_emojis(const std::vector<RawRecord>& records, const EmojiBlocks& blocks,
                           const LabelMap& labels) {
  CorpusStats stats;
  for (const auto& rec : records) {
    const int bit = labels.to_bit(rec.label);
    const std::size_t slot = bit == 1 ? 0 : 1;
    ++stats.class_totals[slot];
    for (char32_t cp : utf8_decode(rec.body)) {
      if (!blocks.contains(cp)) continue;
      std::string key;
      append_utf8(key, cp);
      ++stats.emoji_counts[key][slot];
    }
  }
  return stats;
}

CorpusStats collect_stats(const std::vector<RawRecord>& records, const TokenizerConfig& cfg,
                          const LabelMap& labels) {
  CorpusStats stats = extract_emojis(records, cfg.emoji, labels);
  for (const auto& rec : records) {
    const std::size_t slot = labels.to_bit(rec.label) == 1 ? 0 : 1;
    for (const auto& tok : normalize_and_tokenize(rec.body, cfg))
      if (tok.size() > 1 && tok[0] == '#') ++stats.hashtag_counts[tok][slot];
  }
  return stats;
}

namespace {

nlohmann::json ranked_counts(const std::map<std::string, std::array<std::uint64_t, 2>>& counts) {
  std::vector<std::pair<std::string, std::array<std::uint64_t, 2>>> items(counts.begin(),
                                                                          counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second[0] + a.second[1] > b.second[0] + b.second[1];
  });
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [tok, c] : items)
    arr.push_back({{"token", tok}, {"label1", c[0]}, {"label0", c[1]}, {"total", c[0] + c[1]}});
  return arr;
}

}  // namespace

std::string stats_to_json(const CorpusStats& stats, std::size_t dropped_empty) {
  nlohmann::json j;
  j["class_totals"] = {{"label1", stats.class_totals[0]}, {"label0", stats.class_totals[1]}};
  j["class_proportions"] = {{"label1", stats.proportion(1)}, {"label0", stats.proportion(0)}};
  j["total_emojis"] = stats.total_emojis();
  j["emojis_label1"] = stats.emojis_in_class(1);
  j["emojis_label0"] = stats.emojis_in_class(0);
  j["emojis"] = ranked_counts(stats.emoji_counts);
  j["hashtags"] = ranked_counts(stats.hashtag_counts);
  j["dropped_empty_records"] = dropped_empty;
  return j.dump(2);
}

std::vector<RawRecord> balanced_subsample(const std::vector<RawRecord>& records,
                                          std::size_t per_class, const LabelMap& labels,
                                          RngState& rng) {
  std::vector<RawRecord> positives, negatives;
  for (const auto& rec : records)
    (labels.to_bit(rec.label) == 1 ? positives : negatives).push_back(rec);
  if (positives.size() < per_class)
    throw std::invalid_argument("insufficient data: class '" + labels.positive + "' has " +
                                std::to_string(positives.size()) + " records, need " +
                                std::to_string(per_class));
  if (negatives.size() < per_class)
    throw std::invalid_argument("insufficient data: class '" + labels.negative + "' has " +
                                std::to_string(negatives.size()) + " records, need " +
                                std::to_string(per_class));
  rng.shuffle(positives);
  rng.shuffle(negatives);
  std::vector<RawRecord> out;
  out.reserve(2 * per_class);
  out.insert(out.end(), positives.begin(), positives.begin() + static_cast<long>(per_class));
  out.insert(out.end(), negatives.begin(), negatives.begin() + static_cast<long>(per_class));
  rng.shuffle(out);
  return out;
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<RawRecord> read_raw_tsv(const std::string& path, Language lang, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input TSV: " + path);
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (has_header && line_no == 1) continue;
    const auto first = line.find('\t');
    const auto last = line.rfind('\t');
    if (first == std::string::npos || last == first)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected id<TAB>text<TAB>label");
    RawRecord rec;
    rec.id = line.substr(0, first);
    rec.body = line.substr(first + 1, last - first - 1);
    rec.label = line.substr(last + 1);
    rec.language = lang;
    if (rec.body.empty())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty text field");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_clean_tsv(const std::string& path, const std::vector<CleanRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write cleaned TSV: " + path);
  for (const auto& rec : records) {
    out << rec.id << '\t';
    for (std::size_t i = 0; i < rec.tokens.size(); ++i) {
      if (i) out << ' ';
      out << rec.tokens[i];
    }
    out << '\t' << rec.label << '\t' << to_string(rec.language) << '\n';
  }
  if (!out) throw IoError("failed writing cleaned TSV: " + path);
}

std::vector<CleanRecord> read_clean_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cleaned TSV: " + path);
  std::vector<CleanRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const auto tab = line.find('\t', start);
      if (f < 3 && tab == std::string::npos)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": expected 4 tab-separated fields");
      fields[f] = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      start = tab + 1;
    }
    CleanRecord rec;
    rec.id = fields[0];
    std::stringstream toks(fields[1]);
    std::string tok;
    while (toks >> tok) rec.tokens.push_back(tok);
    if (fields[2] != "0" && fields[2] != "1")
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    rec.label = fields[2] == "1" ? 1 : 0;
    rec.language = parse_language(fields[3]);
    if (rec.tokens.empty())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty token list");
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace snet
