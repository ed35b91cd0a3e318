// SPDX-License-Identifier: Apache-2.0
// snet: preprocessing, skip-gram embeddings, LSTM / BiLSTM-attention
// classifiers, transfer and joint training, evaluation, attention export.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snet/evaluation.hpp"
#include "snet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--out-dir", opts.out_dir, "Directory for all outputs")
      ->capture_default_str();
  sub->add_option("--seed", opts.seed, "RNG seed")->capture_default_str();
  sub->add_option("--config", opts.config,
                  "key=value file; every flag has an equivalent key and command-line flags win");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Turns config entries into trailing flags for anything not already given on
// the command line, so explicit flags always win. Unknown keys become unknown
// flags and fail parsing.
std::vector<std::string> with_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw snet::IoError("cannot open config file: " + config_path);
  auto given = [&](const std::string& name) {
    const std::string dashed = "--" + name;
    for (const auto& a : args)
      if (a == dashed || a.rfind(dashed + "=", 0) == 0) return true;
    return false;
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(config_path + ":" + std::to_string(line_no) +
                                  ": expected key=value");
    const std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(config_path + ":" + std::to_string(line_no) + ": empty key");
    if (given(key)) continue;
    const bool quoted = value.size() >= 2 && value.front() == '"' && value.back() == '"';
    if (quoted) value = value.substr(1, value.size() - 2);
    if (!quoted && value.find_first_of(" \t") != std::string::npos) {
      // Multi-value options (e.g. split=70 15 15); quote a value to keep
      // embedded whitespace literal.
      args.push_back("--" + key);
      std::stringstream parts(value);
      std::string part;
      while (parts >> part) args.push_back(part);
    } else {
      args.push_back("--" + key + "=" + value);
    }
  }
  return args;
}

void require_readable(const std::string& path, const std::string& what) {
  std::ifstream probe(path);
  if (!probe) throw snet::IoError("cannot open " + what + ": " + path);
}

void prepare_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw snet::IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw snet::IoError("cannot write " + path);
  out << content;
  if (!out) throw snet::IoError("failed writing " + path);
}

void write_manifest(const std::string& out_dir, const std::string& subcommand, const json& opts) {
  json j;
  j["subcommand"] = subcommand;
  j["options"] = opts;
  write_text_file((fs::path(out_dir) / "run_manifest.json").string(), j.dump(2) + "\n");
}

snet::Language parse_lang_flag(const std::string& lang) { return snet::parse_language(lang); }

void add_hyperparam_flags(CLI::App* sub, snet::Hyperparams& hp, bool attention_flags) {
  sub->add_option("--batch_size", hp.batch_size, "Examples per optimizer step (per language)")
      ->capture_default_str();
  sub->add_option("--epochs", hp.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--learning_rate", hp.learning_rate, "Adam learning rate")
      ->capture_default_str();
  sub->add_option("--dropout", hp.dropout, "Dropout probability")->capture_default_str();
  sub->add_option("--lstm_layers", hp.lstm_layers, "Stacked LSTM layers")->capture_default_str();
  sub->add_option("--lstm_hidden", hp.lstm_hidden,
                  "Hidden size (per direction for the joint model)")
      ->capture_default_str();
  if (attention_flags) {
    sub->add_option("--attention_hops", hp.attention_hops, "Attention hops r")
        ->capture_default_str();
    sub->add_option("--attention_dim", hp.attention_dim, "Attention hidden size d_a")
        ->capture_default_str();
    sub->add_option("--penalization_coeff", hp.penalization_coeff,
                    "Weight of the attention redundancy penalty")
        ->capture_default_str();
    sub->add_option("--fc_width", hp.fc_width, "Fully connected layer width")
        ->capture_default_str();
  }
}

json hyperparams_json(const snet::Hyperparams& hp) {
  json j;
  for (const auto& [name, value] : hp.to_entries()) j[name] = value;
  return j;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessOpts {
  CommonOpts common;
  std::string input;
  std::string lang = "hindi";
  bool header = false;
  std::string stopwords;
  std::string positive_label, negative_label;
  std::size_t per_class = 0;
  std::vector<std::size_t> split_sizes;
  std::string emoji_blocks;
};

int run_preprocess(const PreprocessOpts& o) {
  using namespace snet;
  require_readable(o.input, "input TSV");
  prepare_out_dir(o.common.out_dir);

  const Language lang = parse_lang_flag(o.lang);
  LabelMap labels = LabelMap::defaults_for(lang);
  if (!o.positive_label.empty()) labels.positive = o.positive_label;
  if (!o.negative_label.empty()) labels.negative = o.negative_label;

  TokenizerConfig cfg;
  if (!o.stopwords.empty()) cfg.stop_words = load_stop_words(o.stopwords);
  if (!o.emoji_blocks.empty()) cfg.emoji = EmojiBlocks::parse(o.emoji_blocks);

  RngState rng(o.common.seed);
  std::vector<RawRecord> records = read_raw_tsv(o.input, lang, o.header);
  std::printf("read %zu records from %s\n", records.size(), o.input.c_str());
  if (o.per_class > 0) {
    records = balanced_subsample(records, o.per_class, labels, rng);
    std::printf("balanced subsample: %zu records (%zu per class)\n", records.size(), o.per_class);
  }

  const CorpusStats stats = collect_stats(records, cfg, labels);
  const CleanResult cleaned = clean_records(records, cfg, labels);
  std::printf("cleaned: %zu records kept, %zu dropped empty\n", cleaned.records.size(),
              cleaned.dropped_empty);

  const fs::path out(o.common.out_dir);
  write_text_file((out / "stats.json").string(), stats_to_json(stats, cleaned.dropped_empty));

  if (!o.split_sizes.empty()) {
    if (o.split_sizes.size() != 3)
      throw std::invalid_argument("--split expects three sizes: train val test");
    const SplitSizes sizes{o.split_sizes[0], o.split_sizes[1], o.split_sizes[2]};
    auto parts = split(cleaned.records, sizes, rng);
    write_clean_tsv((out / "train.tsv").string(), parts.train);
    write_clean_tsv((out / "val.tsv").string(), parts.val);
    write_clean_tsv((out / "test.tsv").string(), parts.test);
    std::printf("split: train=%zu val=%zu test=%zu leftover=%zu\n", parts.train.size(),
                parts.val.size(), parts.test.size(), parts.leftover.size());
    if (!parts.leftover.empty())
      write_clean_tsv((out / "leftover.tsv").string(), parts.leftover);
  } else {
    write_clean_tsv((out / "clean.tsv").string(), cleaned.records);
  }

  json opts{{"input", o.input},
            {"lang", o.lang},
            {"header", o.header},
            {"stopwords", o.stopwords},
            {"positive_label", labels.positive},
            {"negative_label", labels.negative},
            {"per_class", o.per_class},
            {"split", o.split_sizes},
            {"emoji_blocks", o.emoji_blocks},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir}};
  write_manifest(o.common.out_dir, "preprocess", opts);
  return 0;
}

// ---------------------------------------------------------------------------
// train-embeddings

struct TrainEmbeddingsOpts {
  CommonOpts common;
  std::string input;
  snet::Word2VecHyperparams hp;
  std::uint64_t min_count = 1;
};

int run_train_embeddings(const TrainEmbeddingsOpts& o) {
  using namespace snet;
  require_readable(o.input, "cleaned TSV");
  prepare_out_dir(o.common.out_dir);

  const std::vector<CleanRecord> corpus = read_clean_tsv(o.input);
  const Vocabulary vocab = Vocabulary::build(corpus, o.min_count);
  if (vocab.size() < 2) throw std::invalid_argument("vocabulary too small to train embeddings");
  const auto encoded = encode_records(corpus, vocab);

  RngState rng(o.common.seed);
  const auto pairs = generate_pairs(encoded, o.hp.window, vocab, rng);
  std::printf("vocabulary: %zu words; training pairs after subsampling: %zu\n", vocab.size(),
              pairs.size());
  if (pairs.empty()) throw std::invalid_argument("no training pairs survived subsampling");

  const Word2VecResult result = train_word2vec(pairs, vocab.size(), o.hp, rng);
  std::printf("final epoch loss: %.6f\n", result.epoch_loss.back());

  const fs::path out(o.common.out_dir);
  EmbeddingTable table = EmbeddingTable::from_word2vec(result.model, vocab);
  table.save_text((out / "embeddings.vec").string());
  write_loss_csv((out / "w2v_loss.csv").string(), result.epoch_loss);

  json opts{{"input", o.input},
            {"epochs", o.hp.epochs},
            {"window", o.hp.window},
            {"dim", o.hp.dim},
            {"batch_size", o.hp.batch_size},
            {"learning_rate", o.hp.learning_rate},
            {"min_count", o.min_count},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir}};
  write_manifest(o.common.out_dir, "train-embeddings", opts);
  return 0;
}

// ---------------------------------------------------------------------------
// train-baseline / transfer

struct TrainBaselineOpts {
  CommonOpts common;
  std::string train_path, val_path, embeddings_path;
  std::string lang = "hindi";
  std::string source_path;  // transfer only
  snet::Hyperparams hp = snet::Hyperparams::baseline_defaults();
};

int run_train_baseline(const TrainBaselineOpts& o, bool transfer) {
  using namespace snet;
  require_readable(o.train_path, "train TSV");
  if (!o.val_path.empty()) require_readable(o.val_path, "validation TSV");
  require_readable(o.embeddings_path, "embedding file");
  prepare_out_dir(o.common.out_dir);

  const Language lang = parse_lang_flag(o.lang);
  const EmbeddingTable table = EmbeddingTable::load_text(o.embeddings_path);
  Hyperparams hp = o.hp;
  hp.embedding_dim = table.dim();

  const auto train_set = encode_records(read_clean_tsv(o.train_path), table);
  const auto val_set = o.val_path.empty() ? std::vector<CleanExample>{}
                                          : encode_records(read_clean_tsv(o.val_path), table);

  TrainOptions opt{o.common.seed, 2.0};
  BaselineTrainResult result = [&] {
    if (!transfer) return train_baseline(train_set, val_set, table, lang, hp, opt);
    const Checkpoint source = Checkpoint::load(o.source_path);
    hp.lstm_layers = source.hp.lstm_layers;
    hp.lstm_hidden = source.hp.lstm_hidden;
    if (source.hp.embedding_dim != hp.embedding_dim)
      throw std::invalid_argument("embedding dim " + std::to_string(hp.embedding_dim) +
                                  " does not match source checkpoint (" +
                                  std::to_string(source.hp.embedding_dim) + ")");
    return train_transfer(source, train_set, val_set, table, lang, hp, opt);
  }();

  const fs::path out(o.common.out_dir);
  result.best.save((out / "model.snet").string());
  write_train_log_csv((out / "train_log.csv").string(), result.log);
  std::printf("trained %zu epochs; best validation accuracy %.4f at epoch %zu\n",
              result.epochs_run, result.best_val_accuracy, result.best_epoch);

  json opts{{"train", o.train_path},
            {"val", o.val_path},
            {"embeddings", o.embeddings_path},
            {"lang", o.lang},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir},
            {"hyperparams", hyperparams_json(hp)}};
  if (transfer) opts["source"] = o.source_path;
  write_manifest(o.common.out_dir, transfer ? "transfer" : "train-baseline", opts);
  return 0;
}

// ---------------------------------------------------------------------------
// train-joint

struct TrainJointOpts {
  CommonOpts common;
  std::string hindi_train, hindi_val, bengali_train, bengali_val;
  std::string hindi_embeddings, bengali_embeddings;
  snet::Hyperparams hp = snet::Hyperparams::joint_defaults();
};

int run_train_joint(const TrainJointOpts& o) {
  using namespace snet;
  require_readable(o.hindi_train, "hindi train TSV");
  require_readable(o.bengali_train, "bengali train TSV");
  if (!o.hindi_val.empty()) require_readable(o.hindi_val, "hindi validation TSV");
  if (!o.bengali_val.empty()) require_readable(o.bengali_val, "bengali validation TSV");
  require_readable(o.hindi_embeddings, "hindi embedding file");
  require_readable(o.bengali_embeddings, "bengali embedding file");
  prepare_out_dir(o.common.out_dir);

  const EmbeddingTable hindi_table = EmbeddingTable::load_text(o.hindi_embeddings);
  const EmbeddingTable bengali_table = EmbeddingTable::load_text(o.bengali_embeddings);
  if (hindi_table.dim() != bengali_table.dim())
    throw std::invalid_argument("embedding tables disagree on dimension");
  Hyperparams hp = o.hp;
  hp.embedding_dim = hindi_table.dim();

  auto load = [&](const std::string& path, const EmbeddingTable& table) {
    return path.empty() ? std::vector<CleanExample>{} : encode_records(read_clean_tsv(path), table);
  };
  const auto h_train = load(o.hindi_train, hindi_table);
  const auto h_val = load(o.hindi_val, hindi_table);
  const auto b_train = load(o.bengali_train, bengali_table);
  const auto b_val = load(o.bengali_val, bengali_table);

  TrainOptions opt{o.common.seed, 2.0};
  JointTrainResult result =
      train_joint(h_train, h_val, b_train, b_val, hindi_table, bengali_table, hp, opt);

  const fs::path out(o.common.out_dir);
  result.best.save((out / "model.snet").string());
  write_train_log_csv((out / "train_log.csv").string(), result.log);
  std::printf(
      "trained %zu epochs; best mean validation accuracy %.4f at epoch %zu; "
      "shorter corpus recycled %zu times\n",
      result.epochs_run, result.best_val_accuracy, result.best_epoch, result.recycles);

  json opts{{"hindi_train", o.hindi_train},
            {"hindi_val", o.hindi_val},
            {"bengali_train", o.bengali_train},
            {"bengali_val", o.bengali_val},
            {"hindi_embeddings", o.hindi_embeddings},
            {"bengali_embeddings", o.bengali_embeddings},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir},
            {"hyperparams", hyperparams_json(hp)}};
  write_manifest(o.common.out_dir, "train-joint", opts);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / export-attention

struct EvaluateOpts {
  CommonOpts common;
  std::string checkpoint, data, embeddings;
  std::string lang;
  std::string model_name;
};

void check_vocab_hash(const snet::Checkpoint& ckpt, const snet::EmbeddingTable& table,
                      snet::Language lang) {
  const std::string key = snet::to_string(lang);
  const auto it = ckpt.vocab_hashes.find(key);
  if (it == ckpt.vocab_hashes.end())
    throw std::invalid_argument("checkpoint carries no vocabulary for language " + key);
  if (it->second != table.fingerprint())
    throw std::invalid_argument(
        "vocabulary hash mismatch: the embedding file does not match the one this checkpoint "
        "was trained with (language " +
        key + ")");
}

int run_evaluate(const EvaluateOpts& o) {
  using namespace snet;
  const Checkpoint ckpt = Checkpoint::load(o.checkpoint);
  require_readable(o.data, "data TSV");
  require_readable(o.embeddings, "embedding file");
  prepare_out_dir(o.common.out_dir);

  const EmbeddingTable table = EmbeddingTable::load_text(o.embeddings);
  Language lang;
  if (!o.lang.empty()) {
    lang = parse_lang_flag(o.lang);
  } else if (ckpt.kind == ModelKind::baseline) {
    lang = baseline_language(ckpt);
  } else {
    throw std::invalid_argument("--lang is required for joint checkpoints");
  }
  if (ckpt.kind == ModelKind::baseline && lang != baseline_language(ckpt))
    throw std::invalid_argument("checkpoint was trained for " +
                                to_string(baseline_language(ckpt)) + ", not " + to_string(lang));
  check_vocab_hash(ckpt, table, lang);

  auto examples = encode_records(read_clean_tsv(o.data), table);
  for (const auto& ex : examples)
    if (ex.language != lang)
      throw std::invalid_argument("data record " + ex.id + " is tagged " +
                                  to_string(ex.language) + ", expected " + to_string(lang));

  MetricsReport report;
  if (ckpt.kind == ModelKind::baseline) {
    const BaselineClassifier model = baseline_from_checkpoint(ckpt);
    report = evaluate_model(model, table, examples);
  } else {
    const AttentionClassifier model = attention_from_checkpoint(ckpt);
    report = evaluate_model(model, table, examples);
  }

  const std::string model_name =
      o.model_name.empty() ? to_string(ckpt.kind) + "-" + to_string(lang) : o.model_name;
  const fs::path out(o.common.out_dir);
  write_text_file((out / "metrics.json").string(), metrics_to_json(report, model_name) + "\n");
  write_text_file((out / "metrics.csv").string(), metrics_to_csv(report, model_name));
  std::printf("%s: accuracy %.4f, macro P %.4f, macro R %.4f, macro F1 %.4f (%zu examples)\n",
              model_name.c_str(), report.accuracy, report.macro_precision, report.macro_recall,
              report.macro_f1, examples.size());

  json opts{{"checkpoint", o.checkpoint},
            {"data", o.data},
            {"embeddings", o.embeddings},
            {"lang", to_string(lang)},
            {"model_name", model_name},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir}};
  write_manifest(o.common.out_dir, "evaluate", opts);
  return 0;
}

struct ExportAttentionOpts {
  CommonOpts common;
  std::string checkpoint, data, embeddings;
  std::string lang = "hindi";
  std::vector<std::size_t> hops = {0, 1, 2, 3, 4};
  double min_confidence = 0.90;
};

int run_export_attention(const ExportAttentionOpts& o) {
  using namespace snet;
  const Checkpoint ckpt = Checkpoint::load(o.checkpoint);
  if (ckpt.kind != ModelKind::joint)
    throw std::invalid_argument("export-attention needs an attention (joint) checkpoint");
  require_readable(o.data, "data TSV");
  require_readable(o.embeddings, "embedding file");
  prepare_out_dir(o.common.out_dir);

  const EmbeddingTable table = EmbeddingTable::load_text(o.embeddings);
  const Language lang = parse_lang_flag(o.lang);
  check_vocab_hash(ckpt, table, lang);

  std::vector<CleanRecord> records = read_clean_tsv(o.data);
  for (const auto& rec : records)
    if (rec.language != lang)
      throw std::invalid_argument("data record " + rec.id + " is tagged " +
                                  to_string(rec.language) + ", expected " + to_string(lang));

  const AttentionClassifier model = attention_from_checkpoint(ckpt);
  const auto kept =
      export_attention(model, table, records, o.hops, o.min_confidence, o.common.out_dir);
  std::printf("exported %zu of %zu sequences (confidence > %.2f)\n", kept.size(), records.size(),
              o.min_confidence);

  json opts{{"checkpoint", o.checkpoint},
            {"data", o.data},
            {"embeddings", o.embeddings},
            {"lang", o.lang},
            {"hops", o.hops},
            {"min_confidence", o.min_confidence},
            {"seed", o.common.seed},
            {"out_dir", o.common.out_dir}};
  write_manifest(o.common.out_dir, "export-attention", opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snet: skip-gram embeddings and LSTM / BiLSTM-attention sentiment classifiers"};
  app.require_subcommand(1);

  PreprocessOpts pre;
  CLI::App* sub_pre = app.add_subcommand("preprocess", "Clean, analyse and split a raw TSV corpus");
  add_common(sub_pre, pre.common);
  sub_pre->add_option("--input", pre.input, "Raw TSV: id<TAB>text<TAB>label")->required();
  sub_pre->add_option("--lang", pre.lang, "Corpus language: hindi|bengali")->required();
  sub_pre->add_flag("--header", pre.header, "Input has a header row");
  sub_pre->add_option("--stopwords", pre.stopwords, "Stop-word list, one word per line");
  sub_pre->add_option("--positive-label", pre.positive_label, "Label mapped to 1");
  sub_pre->add_option("--negative-label", pre.negative_label, "Label mapped to 0");
  sub_pre->add_option("--per-class", pre.per_class, "Balanced subsample size per class (0 = all)");
  sub_pre->add_option("--split", pre.split_sizes, "Train/val/test sizes after cleaning")
      ->expected(3);
  sub_pre->add_option("--emoji-blocks", pre.emoji_blocks,
                      "Override emoji code-point ranges, e.g. 1F300-1FAFF,2600-27BF");

  TrainEmbeddingsOpts emb;
  CLI::App* sub_emb = app.add_subcommand("train-embeddings", "Train skip-gram word embeddings");
  add_common(sub_emb, emb.common);
  sub_emb->add_option("--input", emb.input, "Cleaned TSV (typically the train split)")->required();
  sub_emb->add_option("--epochs", emb.hp.epochs, "Training epochs")->capture_default_str();
  sub_emb->add_option("--window", emb.hp.window, "Context window size")->capture_default_str();
  sub_emb->add_option("--dim", emb.hp.dim, "Embedding dimension")->capture_default_str();
  sub_emb->add_option("--batch_size", emb.hp.batch_size, "Pairs per optimizer step")
      ->capture_default_str();
  sub_emb->add_option("--learning_rate", emb.hp.learning_rate, "Adam learning rate")
      ->capture_default_str();
  sub_emb->add_option("--min-count", emb.min_count, "Minimum word count kept in the vocabulary")
      ->capture_default_str();

  TrainBaselineOpts base;
  CLI::App* sub_base =
      app.add_subcommand("train-baseline", "Train the stacked-LSTM classifier from scratch");
  add_common(sub_base, base.common);
  sub_base->add_option("--train", base.train_path, "Cleaned train TSV")->required();
  sub_base->add_option("--val", base.val_path, "Cleaned validation TSV");
  sub_base->add_option("--embeddings", base.embeddings_path, "Embedding file")->required();
  sub_base->add_option("--lang", base.lang, "Language: hindi|bengali")->capture_default_str();
  add_hyperparam_flags(sub_base, base.hp, false);

  TrainBaselineOpts trans;
  trans.lang = "bengali";
  CLI::App* sub_trans = app.add_subcommand(
      "transfer", "Fine-tune a baseline checkpoint on another language's corpus");
  add_common(sub_trans, trans.common);
  sub_trans->add_option("--source", trans.source_path, "Source baseline checkpoint")->required();
  sub_trans->add_option("--train", trans.train_path, "Cleaned train TSV")->required();
  sub_trans->add_option("--val", trans.val_path, "Cleaned validation TSV");
  sub_trans->add_option("--embeddings", trans.embeddings_path, "Target-language embedding file")
      ->required();
  sub_trans->add_option("--lang", trans.lang, "Target language")->capture_default_str();
  add_hyperparam_flags(sub_trans, trans.hp, false);

  TrainJointOpts joint;
  CLI::App* sub_joint = app.add_subcommand(
      "train-joint", "Train the shared BiLSTM self-attention classifier on both languages");
  add_common(sub_joint, joint.common);
  sub_joint->add_option("--hindi-train", joint.hindi_train, "Hindi train TSV")->required();
  sub_joint->add_option("--hindi-val", joint.hindi_val, "Hindi validation TSV");
  sub_joint->add_option("--bengali-train", joint.bengali_train, "Bengali train TSV")->required();
  sub_joint->add_option("--bengali-val", joint.bengali_val, "Bengali validation TSV");
  sub_joint->add_option("--hindi-embeddings", joint.hindi_embeddings, "Hindi embedding file")
      ->required();
  sub_joint->add_option("--bengali-embeddings", joint.bengali_embeddings, "Bengali embedding file")
      ->required();
  add_hyperparam_flags(sub_joint, joint.hp, true);

  EvaluateOpts eval;
  CLI::App* sub_eval = app.add_subcommand("evaluate", "Score a checkpoint on a test split");
  add_common(sub_eval, eval.common);
  sub_eval->add_option("--checkpoint", eval.checkpoint, "Model checkpoint (.snet)")->required();
  sub_eval->add_option("--data", eval.data, "Cleaned test TSV")->required();
  sub_eval->add_option("--embeddings", eval.embeddings, "Embedding file for the data's language")
      ->required();
  sub_eval->add_option("--lang", eval.lang, "Language of the data (required for joint models)");
  sub_eval->add_option("--model-name", eval.model_name, "Name used in the metrics report");

  ExportAttentionOpts exp;
  CLI::App* sub_exp = app.add_subcommand(
      "export-attention", "Write attention heatmaps (JSON + HTML) for confident predictions");
  add_common(sub_exp, exp.common);
  sub_exp->add_option("--checkpoint", exp.checkpoint, "Joint checkpoint (.snet)")->required();
  sub_exp->add_option("--data", exp.data, "Cleaned TSV")->required();
  sub_exp->add_option("--embeddings", exp.embeddings, "Embedding file for --lang")->required();
  sub_exp->add_option("--lang", exp.lang, "Language of the data")->capture_default_str();
  sub_exp->add_option("--hops", exp.hops, "Attention hop indices to render")
      ->capture_default_str();
  sub_exp->add_option("--min-confidence", exp.min_confidence,
                      "Keep only predictions with confidence above this")
      ->capture_default_str();

  try {
    std::vector<std::string> args = with_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage_error: " << e.what() << "\n";
    return 2;
  } catch (const snet::IoError& e) {
    std::cerr << "io_error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation_error: " << e.what() << "\n";
    return 4;
  }

  try {
    if (sub_pre->parsed()) return run_preprocess(pre);
    if (sub_emb->parsed()) return run_train_embeddings(emb);
    if (sub_base->parsed()) return run_train_baseline(base, false);
    if (sub_trans->parsed()) return run_train_baseline(trans, true);
    if (sub_joint->parsed()) return run_train_joint(joint);
    if (sub_eval->parsed()) return run_evaluate(eval);
    if (sub_exp->parsed()) return run_export_attention(exp);
  } catch (const snet::IoError& e) {
    std::cerr << "io_error: " << e.what() << "\n";
    return 3;
  } catch (const snet::CheckpointError& e) {
    std::cerr << "checkpoint_error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation_error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
