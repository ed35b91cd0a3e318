// SPDX-License-Identifier: Apache-2.0
// Exercises the installed command-line surface through real subprocesses.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "snet/training.hpp"
#include "synthetic.hpp"

using namespace snet;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SNET_CLI_PATH;

int run_cli(const std::string& args, const std::string& capture_stderr_to = "") {
  std::string cmd = kCli + " " + args + " >/dev/null";
  cmd += capture_stderr_to.empty() ? " 2>/dev/null" : " 2>" + capture_stderr_to;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Fixture {
  fs::path dir;
  std::string train_tsv, val_tsv, embeddings;

  explicit Fixture(const std::string& name, Language lang = Language::hindi) {
    dir = fs::path("snet_cli_tmp") / name;
    fs::create_directories(dir);
    auto data = snet::testing::make_separable(lang, 24, 8, 4, 31);
    write_examples((dir / "train.tsv").string(), data.train, data.table, lang);
    write_examples((dir / "val.tsv").string(), data.val, data.table, lang);
    data.table.save_text((dir / "emb.vec").string());
    train_tsv = (dir / "train.tsv").string();
    val_tsv = (dir / "val.tsv").string();
    embeddings = (dir / "emb.vec").string();
  }

  static void write_examples(const std::string& path, const std::vector<CleanExample>& examples,
                             const EmbeddingTable& table, Language lang) {
    std::vector<CleanRecord> records;
    for (const auto& ex : examples) {
      CleanRecord rec{ex.id, {}, ex.label, lang};
      for (auto idx : ex.tokens) rec.tokens.push_back(table.words.at(idx));
      records.push_back(std::move(rec));
    }
    write_clean_tsv(path, records);
  }
};

const std::string kTinyNet = " --epochs 3 --lstm_layers 1 --lstm_hidden 4 --batch_size 8";

}  // namespace

TEST_CASE("--help exits 0 for every subcommand") {
  CHECK(run_cli("--help") == 0);
  for (const char* sub : {"preprocess", "train-embeddings", "train-baseline", "transfer",
                          "train-joint", "evaluate", "export-attention"})
    CHECK(run_cli(std::string(sub) + " --help") == 0);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("no-such-subcommand") == 2);
  CHECK(run_cli("evaluate --no-such-flag") == 2);
  CHECK(run_cli("") == 2);  // a subcommand is required
}

TEST_CASE("missing checkpoint exits 3 and names the path") {
  Fixture fx("missing_ckpt");
  const std::string err = (fx.dir / "err.txt").string();
  const int rc = run_cli("evaluate --checkpoint missing.snet --data " + fx.train_tsv +
                             " --embeddings " + fx.embeddings + " --out-dir " +
                             (fx.dir / "out").string(),
                         err);
  CHECK(rc == 3);
  const std::string message = slurp(err);
  CHECK(message.find("io_error:") == 0);
  CHECK(message.find("missing.snet") != std::string::npos);
  fs::remove_all("snet_cli_tmp");
}

TEST_CASE("training subcommands are deterministic at the byte level") {
  Fixture fx("determinism");
  auto train_once = [&](const std::string& out) {
    return run_cli("train-baseline --train " + fx.train_tsv + " --val " + fx.val_tsv +
                   " --embeddings " + fx.embeddings + " --lang hindi" + kTinyNet +
                   " --seed 7 --out-dir " + (fx.dir / out).string());
  };
  REQUIRE(train_once("a") == 0);
  REQUIRE(train_once("b") == 0);
  CHECK(slurp((fx.dir / "a/model.snet").string()) == slurp((fx.dir / "b/model.snet").string()));
  CHECK(slurp((fx.dir / "a/train_log.csv").string()) ==
        slurp((fx.dir / "b/train_log.csv").string()));

  // A different seed produces a different model.
  REQUIRE(run_cli("train-baseline --train " + fx.train_tsv + " --val " + fx.val_tsv +
                  " --embeddings " + fx.embeddings + " --lang hindi" + kTinyNet +
                  " --seed 8 --out-dir " + (fx.dir / "c").string()) == 0);
  CHECK(slurp((fx.dir / "a/model.snet").string()) != slurp((fx.dir / "c/model.snet").string()));
  fs::remove_all("snet_cli_tmp");
}

TEST_CASE("config files feed flags and the command line wins") {
  Fixture fx("config");
  {
    std::ofstream cfg(fx.dir / "run.cfg");
    cfg << "epochs=2\nlstm_layers=1\nlstm_hidden=4\nbatch_size=8\nseed=5\n";
  }
  REQUIRE(run_cli("train-baseline --train " + fx.train_tsv + " --embeddings " + fx.embeddings +
                  " --lang hindi --config " + (fx.dir / "run.cfg").string() + " --out-dir " +
                  (fx.dir / "a").string()) == 0);
  // 2 epochs -> header + 2 train rows (no validation set given).
  {
    std::ifstream log(fx.dir / "a/train_log.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(log, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 3);
  }

  // --epochs on the command line overrides the config file.
  REQUIRE(run_cli("train-baseline --train " + fx.train_tsv + " --embeddings " + fx.embeddings +
                  " --lang hindi --config " + (fx.dir / "run.cfg").string() +
                  " --epochs 1 --out-dir " + (fx.dir / "b").string()) == 0);
  {
    std::ifstream log(fx.dir / "b/train_log.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(log, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);
  }

  // Unknown config keys are rejected.
  {
    std::ofstream cfg(fx.dir / "bad.cfg");
    cfg << "mystery_flag=1\n";
  }
  CHECK(run_cli("train-baseline --train " + fx.train_tsv + " --embeddings " + fx.embeddings +
                " --lang hindi --config " + (fx.dir / "bad.cfg").string() + " --out-dir " +
                (fx.dir / "c").string()) == 2);
  fs::remove_all("snet_cli_tmp");
}

TEST_CASE("run manifest records the resolved options") {
  Fixture fx("manifest");
  REQUIRE(run_cli("train-baseline --train " + fx.train_tsv + " --embeddings " + fx.embeddings +
                  " --lang hindi" + kTinyNet + " --seed 3 --out-dir " +
                  (fx.dir / "out").string()) == 0);
  const std::string manifest = slurp((fx.dir / "out/run_manifest.json").string());
  CHECK(manifest.find("\"subcommand\": \"train-baseline\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 3") != std::string::npos);
  CHECK(manifest.find("\"lstm_hidden\": 4") != std::string::npos);
  fs::remove_all("snet_cli_tmp");
}

TEST_CASE("vocabulary hash mismatches are explicit validation errors") {
  Fixture fx("hash");
  REQUIRE(run_cli("train-baseline --train " + fx.train_tsv + " --val " + fx.val_tsv +
                  " --embeddings " + fx.embeddings + " --lang hindi" + kTinyNet +
                  " --seed 7 --out-dir " + (fx.dir / "model").string()) == 0);

  // Perturb one embedding value: same words, different fingerprint.
  EmbeddingTable table = EmbeddingTable::load_text(fx.embeddings);
  table.vectors(0, 0) += 0.5f;
  const std::string other = (fx.dir / "other.vec").string();
  table.save_text(other);

  const std::string err = (fx.dir / "err.txt").string();
  const int rc = run_cli("evaluate --checkpoint " + (fx.dir / "model/model.snet").string() +
                             " --data " + fx.val_tsv + " --embeddings " + other + " --out-dir " +
                             (fx.dir / "out").string(),
                         err);
  CHECK(rc == 4);
  CHECK(slurp(err).find("vocabulary hash mismatch") != std::string::npos);
  fs::remove_all("snet_cli_tmp");
}
