#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mimgan/data.hpp"
#include "mimgan/synthetic.hpp"

using namespace mimgan;
namespace fs = std::filesystem;

namespace {

const std::string kCli = MIMGAN_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& child) const {
    return (path / child).string();
  }
};

}  // namespace

TEST_CASE("theory-check passes and writes a report with >= 10 named checks") {
  TempDir tmp("mimgan_cli_theory");
  REQUIRE(run("theory-check --out " + (tmp / "r")) == 0);
  const nlohmann::json report =
      nlohmann::json::parse(slurp(tmp.path / "r" / "theory_report.json"));
  REQUIRE(report.at("all_passed").get<bool>());
  REQUIRE(report.at("checks").size() >= 10);
  std::set<std::string> names;
  for (const auto& c : report.at("checks")) {
    names.insert(c.at("check_name").get<std::string>());
    REQUIRE(c.at("status") == "pass");
  }
  REQUIRE(names.size() == report.at("checks").size());
}

TEST_CASE("theory-check with an injected fault exits 1 naming the check") {
  TempDir tmp("mimgan_cli_fault");
  for (const std::string broken :
       {"renyi_identity", "smallprob_dominance_exact", "pointwise_minimizer"}) {
    REQUIRE(run("theory-check --inject-fault " + broken + " --out " +
                (tmp / broken)) == 1);
    const nlohmann::json report = nlohmann::json::parse(
        slurp(tmp.path / broken / "theory_report.json"));
    REQUIRE_FALSE(report.at("all_passed").get<bool>());
    for (const auto& c : report.at("checks")) {
      if (c.at("check_name") == broken) REQUIRE(c.at("status") == "fail");
    }
  }
}

TEST_CASE("train, detect, evaluate round-trip on a toy dataset") {
  TempDir tmp("mimgan_cli_tde");
  const std::string csv = tmp / "toy.csv";
  save_csv(make_two_cluster(240, 0.1, 5), csv);

  REQUIRE(run("train --dataset " + csv + " --out " + (tmp / "model") +
              " --kind mim --iterations 60 --batch-size 32 --latent-dim 4 "
              "--n-train 180 --split-seed 3 --seed 11") == 0);
  REQUIRE(fs::exists(tmp.path / "model" / "discriminator.json"));
  REQUIRE(fs::exists(tmp.path / "model" / "generator.json"));
  REQUIRE(fs::exists(tmp.path / "model" / "config.json"));
  REQUIRE(fs::exists(tmp.path / "model" / "loss_history.csv"));

  REQUIRE(run("detect --model " + (tmp / "model") + " --out " + (tmp / "det") +
              " --inversion-iterations 40 --restarts 2") == 0);
  const std::string scores = slurp(tmp.path / "det" / "scores.csv");
  REQUIRE(scores.find("index,raw_score,normalized_score,predicted_label,"
                      "true_label") == 0);
  // one row per test sample + header
  REQUIRE(std::count(scores.begin(), scores.end(), '\n') == 61);

  REQUIRE(run("evaluate --scores " + (tmp / "det") + "/scores.csv --out " +
              (tmp / "eval")) == 0);
  const nlohmann::json report =
      nlohmann::json::parse(slurp(tmp.path / "eval" / "report.json"));
  REQUIRE(report.contains("anomaly_positive"));
  REQUIRE(report.contains("normal_positive"));
  REQUIRE(fs::exists(tmp.path / "eval" / "roc.csv"));
}

TEST_CASE("detect with a missing checkpoint exits 2") {
  TempDir tmp("mimgan_cli_missing");
  REQUIRE(run("detect --model " + (tmp / "nope") + " --out " + (tmp / "out")) ==
          2);
}

TEST_CASE("recon-error reports a finite value") {
  TempDir tmp("mimgan_cli_re");
  const std::string csv = tmp / "toy.csv";
  save_csv(make_two_cluster(160, 0.1, 6), csv);
  REQUIRE(run("train --dataset " + csv + " --out " + (tmp / "model") +
              " --kind mim --iterations 40 --batch-size 32 --latent-dim 4 "
              "--n-train 120 --split-seed 2 --seed 1") == 0);
  REQUIRE(run("recon-error --model " + (tmp / "model") + " --out " +
              (tmp / "re") + " --inversion-iterations 40 --restarts 2") == 0);
  const nlohmann::json j =
      nlohmann::json::parse(slurp(tmp.path / "re" / "recon_error.json"));
  REQUIRE(j.at("reconstruction_error").get<double>() >= 0.0);
}

TEST_CASE("compare produces the aggregate report and per-kind roc files") {
  TempDir tmp("mimgan_cli_cmp");
  const std::string csv = tmp / "toy.csv";
  save_csv(make_two_cluster(200, 0.1, 8), csv);

  REQUIRE(run("compare --dataset " + csv + " --out " + (tmp / "cmp") +
              " --kinds mim,original --seeds 0,1 --iterations 30 "
              "--batch-size 32 --latent-dim 4 --n-train 150 "
              "--inversion-iterations 30 --restarts 2") == 0);
  const nlohmann::json report =
      nlohmann::json::parse(slurp(tmp.path / "cmp" / "report.json"));
  REQUIRE(report.at("kinds").size() == 2);
  for (const std::string kind : {"mim", "original"}) {
    REQUIRE(report.at("kinds").contains(kind));
    REQUIRE(report.at("kinds").at(kind).at("auc").at("values").size() == 2);
    REQUIRE(report.at("kinds").at(kind).at("re").at("values").size() == 2);
    REQUIRE(fs::exists(tmp.path / "cmp" / ("roc_" + kind + ".csv")));
    REQUIRE(fs::exists(tmp.path / "cmp" / ("auc_" + kind + ".csv")));
  }
}

TEST_CASE("reruns with identical config and seeds are byte-identical") {
  TempDir tmp("mimgan_cli_det2");
  const std::string csv = tmp / "toy.csv";
  save_csv(make_two_cluster(160, 0.1, 9), csv);

  const std::string base = "compare --dataset " + csv +
                           " --kinds mim --seeds 0,1 --iterations 20 "
                           "--batch-size 32 --latent-dim 4 --n-train 120 "
                           "--inversion-iterations 25 --restarts 2 --out ";
  REQUIRE(run(base + (tmp / "a")) == 0);
  REQUIRE(run(base + (tmp / "b")) == 0);
  REQUIRE(slurp(tmp.path / "a" / "report.json") ==
          slurp(tmp.path / "b" / "report.json"));
  REQUIRE(slurp(tmp.path / "a" / "roc_mim.csv") ==
          slurp(tmp.path / "b" / "roc_mim.csv"));
}

TEST_CASE("make-data writes loadable stand-ins") {
  TempDir tmp("mimgan_cli_mk");
  REQUIRE(run("make-data --name toy --out " + (tmp / "toy.csv")) == 0);
  const Dataset toy = load_csv(tmp / "toy.csv");
  REQUIRE(toy.n == 400);
  REQUIRE(toy.labels.has_value());

  REQUIRE(run("make-data --name thyroid --out " + (tmp / "thy.csv")) == 0);
  const Dataset thy = load_csv(tmp / "thy.csv");
  REQUIRE(thy.n == 3772);
  REQUIRE(thy.d == 6);
  REQUIRE(thy.anomaly_count() == 93);
}

TEST_CASE("config file values are applied") {
  TempDir tmp("mimgan_cli_cfg");
  const std::string csv = tmp / "toy.csv";
  save_csv(make_two_cluster(160, 0.1, 10), csv);
  {
    std::ofstream cfg(tmp / "run.json");
    cfg << R"({"train": {"kind": "lsgan", "iterations": 15, "batch_size": 32,
               "latent_dim": 4, "seed": 5},
               "n_train": 120, "split_seed": 1})";
  }
  REQUIRE(run("train --dataset " + csv + " --config " + (tmp / "run.json") +
              " --out " + (tmp / "model")) == 0);
  const nlohmann::json cfg =
      nlohmann::json::parse(slurp(tmp.path / "model" / "config.json"));
  REQUIRE(cfg.at("train").at("kind") == "lsgan");
  REQUIRE(cfg.at("train").at("iterations") == 15);
}
