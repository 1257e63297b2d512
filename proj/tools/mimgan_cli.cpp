// Command-line front end: theory verification, training, detection,
// evaluation and multi-kind comparison runs. Every command is reproducible:
// identical config and seeds yield byte-identical artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mimgan/data.hpp"
#include "mimgan/detector.hpp"
#include "mimgan/metrics.hpp"
#include "mimgan/synthetic.hpp"
#include "mimgan/theory_checks.hpp"
#include "mimgan/trainer.hpp"

namespace {

using nlohmann::json;
using namespace mimgan;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitIoError = 2;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return json::parse(in);
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw std::invalid_argument("empty seed list");
  return seeds;
}

std::vector<GanKind> parse_kinds(const std::string& csv) {
  std::vector<GanKind> kinds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) kinds.push_back(GanKind::parse(item));
  if (kinds.empty()) throw std::invalid_argument("empty kind list");
  return kinds;
}

void write_roc_csv(const RocResult& roc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "fpr,tpr,threshold\n";
  char buf[120];
  for (const RocPoint& p : roc.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr,
                  p.threshold);
    out << buf;
  }
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd m;
  if (v.empty()) return m;
  for (const double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (const double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Shared experiment knobs, overridable by --config JSON then by flags.
struct RunOptions {
  TrainConfig train;
  ScoreParams score;
  std::size_t n_train = 0;
  std::uint64_t split_seed = 0;
  unsigned threads = 0;
};

void apply_config_file(RunOptions& opt, const std::string& path) {
  const json j = load_json(path);
  if (j.contains("train")) opt.train = TrainConfig::from_json(j.at("train"));
  if (j.contains("inversion"))
    opt.score.inversion = InversionParams::from_json(j.at("inversion"));
  if (j.contains("eta")) opt.score.eta = j.at("eta").get<double>();
  if (j.contains("threshold_rule"))
    opt.score.threshold =
        ThresholdRule::parse(j.at("threshold_rule").get<std::string>());
  if (j.contains("n_train")) opt.n_train = j.at("n_train").get<std::size_t>();
  if (j.contains("split_seed"))
    opt.split_seed = j.at("split_seed").get<std::uint64_t>();
}

int cmd_theory_check(const std::string& out_dir, std::uint64_t seed,
                     const std::string& fault) {
  const std::vector<theory::CheckResult> results =
      theory::run_all_checks(seed, fault);
  const json report = theory::checks_report(results);
  std::cout << report.dump(2) << "\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_json(out_dir + "/theory_report.json", report);
  }
  bool all = true;
  for (const theory::CheckResult& r : results) {
    if (!r.passed) std::cerr << "FAILED check: " << r.name << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitCheckFailed;
}

// Split spec lives in the checkpoint config so detect/recon-error rebuild
// the exact train/test partition the model was fitted on.
void save_split_info(const std::string& dir, const std::string& dataset_path,
                     std::size_t n_train, std::uint64_t split_seed) {
  const json j{{"dataset", dataset_path},
               {"n_train", n_train},
               {"split_seed", split_seed}};
  write_json(dir + "/split.json", j);
}

int cmd_train(const std::string& dataset_path, const std::string& out_dir,
              RunOptions opt) {
  const Dataset ds = load_csv(dataset_path);
  if (const auto warn = manifest_warning(ds)) std::cerr << "warning: " << *warn << "\n";
  if (opt.n_train == 0) opt.n_train = ds.n * 3 / 4;

  const auto [train_split, test_split] = split(ds, {opt.n_train, opt.split_seed});
  const Scaler scaler = scale_fit(train_split);
  const Dataset train_scaled = scale_apply(scaler, train_split);

  TrainedGan gan = train(opt.train, train_scaled);
  gan.scaler = scaler;

  std::filesystem::create_directories(out_dir);
  save_checkpoint(gan, out_dir);
  save_split_info(out_dir, dataset_path, opt.n_train, opt.split_seed);
  write_json(out_dir + "/manifest.json", ds.manifest());
  std::cout << "trained " << opt.train.kind.to_string() << " on " << ds.name
            << " (" << train_scaled.n << " rows); checkpoint in " << out_dir
            << "\n";
  return kExitOk;
}

struct LoadedModel {
  TrainedGan gan;
  Dataset test_scaled;
  double dataset_anomaly_rate = 0.0;  // from the full dataset's labels
};

LoadedModel load_model_and_test(const std::string& model_dir,
                                const std::string& dataset_override) {
  TrainedGan gan = load_checkpoint(model_dir);
  const json split_info = load_json(model_dir + "/split.json");
  const std::string dataset_path = dataset_override.empty()
                                       ? split_info.at("dataset").get<std::string>()
                                       : dataset_override;
  const Dataset ds = load_csv(dataset_path);
  const SplitSpec spec{split_info.at("n_train").get<std::size_t>(),
                       split_info.at("split_seed").get<std::uint64_t>()};
  auto [train_split, test_split] = split(ds, spec);
  (void)train_split;
  double rate = 0.0;
  if (ds.labels && ds.anomaly_count() > 0)
    rate = static_cast<double>(ds.anomaly_count()) / static_cast<double>(ds.n);
  Dataset test_scaled = scale_apply(gan.scaler, test_split);
  return {std::move(gan), std::move(test_scaled), rate};
}

int cmd_detect(const std::string& dataset_path, const std::string& model_dir,
               const std::string& out_dir, const RunOptions& opt) {
  LoadedModel m = load_model_and_test(model_dir, dataset_path);
  const Dataset& test = m.test_scaled;

  std::vector<double> raw(test.n, 0.0);
  std::vector<std::vector<double>> zs(test.n);
  parallel_for(test.n, opt.threads, [&](std::size_t i) {
    const std::uint64_t seed = mix_seed("score", static_cast<std::uint64_t>(i));
    const InversionResult inv =
        invert_latent_full(test.row(i), m.gan, opt.score.inversion, seed);
    const double d_x = m.gan.discriminate(test.row(i));
    raw[i] = (1.0 - opt.score.eta) * inv.j +
             opt.score.eta * sigmoid_ce(d_x, opt.score.beta);
    zs[i] = inv.z_opt;
  });
  const std::vector<double> normalized = normalize_scores(raw);

  ThresholdRule rule = opt.score.threshold;
  if (rule.kind == ThresholdRule::Kind::ContaminationQuantile && rule.auto_rate) {
    if (m.dataset_anomaly_rate <= 0.0)
      throw std::invalid_argument(
          "detect: automatic contamination rate needs labels; pass "
          "--threshold-rule");
    rule = ThresholdRule::contamination(m.dataset_anomaly_rate);
  }
  const std::vector<int> predicted = decide(normalized, rule);

  std::vector<ScoredSample> samples(test.n);
  for (std::size_t i = 0; i < test.n; ++i)
    samples[i] = {static_cast<int>(i), raw[i], normalized[i], predicted[i], zs[i]};

  std::filesystem::create_directories(out_dir);
  save_scores_csv(samples, test.labels, out_dir + "/scores.csv");
  std::cout << "scored " << test.n << " samples; " << out_dir << "/scores.csv\n";
  return kExitOk;
}

struct ScoresFile {
  std::vector<double> raw;
  std::vector<int> predicted;
  std::optional<std::vector<int>> truth;
};

ScoresFile load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty scores file");
  const bool has_truth = line.find("true_label") != std::string::npos;
  ScoresFile sf;
  if (has_truth) sf.truth.emplace();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    sf.raw.push_back(std::stod(cells.at(1)));
    sf.predicted.push_back(std::stoi(cells.at(3)));
    if (has_truth) sf.truth->push_back(std::stoi(cells.at(4)));
  }
  return sf;
}

int cmd_evaluate(const std::string& scores_path, const std::string& out_dir) {
  const ScoresFile sf = load_scores_csv(scores_path);
  if (!sf.truth)
    throw std::invalid_argument("evaluate: scores file carries no true_label");
  const EvalReport report =
      EvalReport::from_predictions(sf.raw, *sf.truth, sf.predicted);
  std::filesystem::create_directories(out_dir);
  write_json(out_dir + "/report.json", report.to_json());
  write_roc_csv(report.roc, out_dir + "/roc.csv");
  std::cout << report.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_recon_error(const std::string& dataset_path, const std::string& model_dir,
                    const std::string& out_dir, const RunOptions& opt) {
  LoadedModel m = load_model_and_test(model_dir, dataset_path);
  const double re =
      reconstruction_error(m.gan, m.test_scaled, opt.score.inversion, opt.threads);
  const json j{{"kind", m.gan.config.kind.to_string()},
               {"n_test", m.test_scaled.n},
               {"reconstruction_error", re}};
  std::cout << j.dump(2) << "\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_json(out_dir + "/recon_error.json", j);
  }
  return kExitOk;
}

int cmd_compare(const std::string& dataset_path, const std::string& out_dir,
                const std::string& kinds_csv, const std::string& seeds_csv,
                RunOptions opt) {
  const Dataset ds = load_csv(dataset_path);
  if (const auto warn = manifest_warning(ds)) std::cerr << "warning: " << *warn << "\n";
  if (opt.n_train == 0) opt.n_train = ds.n * 3 / 4;
  const std::vector<GanKind> kinds = parse_kinds(kinds_csv);
  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv);

  std::filesystem::create_directories(out_dir);
  json report;
  report["dataset"] = ds.manifest();
  report["protocol"] = {{"n_train", opt.n_train},
                        {"iterations", opt.train.iterations},
                        {"seeds", seeds},
                        {"eta", opt.score.eta},
                        {"lambda", opt.score.inversion.lambda},
                        {"threshold_rule", opt.score.threshold.to_string()}};

  for (const GanKind& kind : kinds) {
    std::vector<double> res, aucs, precs, recs, f1s, accs;
    std::vector<RocResult> rocs;
    for (const std::uint64_t seed : seeds) {
      TrainConfig tc = opt.train;
      tc.kind = kind;
      // same data split per seed; model seed decorrelated across kinds
      tc.seed = mix_seed(kind.to_string(), seed);
      const PipelineResult r =
          run_pipeline(ds, tc, opt.score, {opt.n_train, seed}, opt.threads);
      const double re = reconstruction_error(
          r.gan, r.test_scaled, opt.score.inversion, opt.threads);
      res.push_back(re);
      if (r.report) {
        aucs.push_back(r.report->roc.auc);
        rocs.push_back(r.report->roc);
        const PointMetrics& pm = r.report->metrics_anomaly_positive;
        precs.push_back(pm.precision);
        recs.push_back(pm.recall);
        f1s.push_back(pm.f1);
        accs.push_back(pm.accuracy);
      }
    }

    json k;
    const MeanSd re_ms = mean_sd(res);
    k["re"] = {{"values", res}, {"mean", re_ms.mean}, {"sd", re_ms.sd},
               {"median", median(res)}};
    if (!aucs.empty()) {
      k["auc"] = {{"values", aucs}, {"median", median(aucs)}};
      const auto pack = [](const std::vector<double>& v) {
        const MeanSd ms = mean_sd(v);
        return json{{"mean", ms.mean}, {"sd", ms.sd}};
      };
      k["metrics_anomaly_positive"] = {{"precision", pack(precs)},
                                       {"recall", pack(recs)},
                                       {"f1", pack(f1s)},
                                       {"accuracy", pack(accs)}};
      // ROC of the median-AUC run
      std::vector<std::size_t> order(aucs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return aucs[a] < aucs[b]; });
      const std::size_t med = order[(order.size() - 1) / 2];
      write_roc_csv(rocs[med], out_dir + "/roc_" + kind.to_string() + ".csv");
      // per-seed AUC list for boxplots
      std::ofstream box(out_dir + "/auc_" + kind.to_string() + ".csv");
      box << "seed,auc\n";
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%llu,%.17g\n",
                      static_cast<unsigned long long>(seeds[i]), aucs[i]);
        box << buf;
      }
    }
    report["kinds"][kind.to_string()] = k;
  }

  write_json(out_dir + "/report.json", report);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_make_data(const std::string& name, const std::string& out_path,
                  std::uint64_t seed) {
  Dataset ds;
  if (name == "toy") {
    ds = make_two_cluster(400, 0.05, seed);
  } else {
    ds = make_standin(name, seed);
  }
  save_csv(ds, out_path);
  std::cout << "wrote " << ds.n << "x" << ds.d << " (" << ds.anomaly_count()
            << " anomalies) to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential-metric GAN toolkit: theory checks, training, "
               "and unsupervised anomaly detection on tabular data"};
  app.require_subcommand(1);

  RunOptions opt;
  // A config file provides defaults; explicit flags override them. CLI11
  // leaves bound variables untouched for absent flags, so applying the file
  // before the parse gives exactly that layering.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(opt, argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error in config file: " << e.what() << "\n";
        return kExitIoError;
      }
    }
  }

  std::string config_path, dataset_path, model_dir, out_dir, scores_path;
  std::string kinds_csv = "mim,original,lsgan,wgan";
  std::string seeds_csv = "0,1,2,3,4";
  std::string threshold_rule, kind_name, fault_check, data_name = "toy";
  std::uint64_t theory_seed = 20240101;

  const auto add_common = [&](CLI::App* cmd, bool with_train) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--threads", opt.threads, "worker threads (0 = auto)");
    if (with_train) {
      cmd->add_option("--iterations", opt.train.iterations, "training iterations");
      cmd->add_option("--batch-size", opt.train.batch_size, "minibatch size");
      cmd->add_option("--latent-dim", opt.train.latent_dim,
                      "latent dimension (0 = auto)");
      cmd->add_option("--lr", opt.train.lr, "Adam learning rate");
      cmd->add_option("--seed", opt.train.seed, "model seed");
      cmd->add_option("--n-train", opt.n_train, "training rows (0 = 3/4 of data)");
      cmd->add_option("--split-seed", opt.split_seed, "split shuffle seed");
    }
    cmd->add_option("--eta", opt.score.eta, "anomaly-score regularizer weight");
    cmd->add_option("--lambda", opt.score.inversion.lambda,
                    "inversion regularizer weight");
    cmd->add_option("--inversion-iterations", opt.score.inversion.iterations,
                    "latent inversion steps per restart");
    cmd->add_option("--restarts", opt.score.inversion.restarts,
                    "latent inversion restarts");
    cmd->add_option("--threshold-rule", threshold_rule,
                    "fixed:<g> | contamination:<r> | contamination:auto");
  };

  CLI::App* theory = app.add_subcommand(
      "theory-check", "run every closed-form verification check");
  theory->add_option("--out", out_dir, "report directory");
  theory->add_option("--seed", theory_seed, "sweep seed");
  theory->add_option("--inject-fault", fault_check,
                     "test fixture: flip a sign inside the named check");

  CLI::App* train_cmd = app.add_subcommand("train", "train a GAN on a CSV dataset");
  train_cmd->add_option("--dataset", dataset_path, "input CSV")->required();
  train_cmd->add_option("--out", out_dir, "checkpoint directory")->required();
  train_cmd->add_option("--kind", kind_name, "original|lsgan|wgan|mim");
  add_common(train_cmd, true);

  CLI::App* detect = app.add_subcommand(
      "detect", "score the held-out split of a trained model");
  detect->add_option("--model", model_dir, "checkpoint directory")->required();
  detect->add_option("--dataset", dataset_path, "override dataset CSV");
  detect->add_option("--out", out_dir, "output directory")->required();
  add_common(detect, false);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "metrics report from a scores CSV with true labels");
  evaluate->add_option("--scores", scores_path, "scores.csv from detect")
      ->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();

  CLI::App* recon = app.add_subcommand(
      "recon-error", "reconstruction error of a trained generator");
  recon->add_option("--model", model_dir, "checkpoint directory")->required();
  recon->add_option("--dataset", dataset_path, "override dataset CSV");
  recon->add_option("--out", out_dir, "output directory");
  add_common(recon, false);

  CLI::App* compare = app.add_subcommand(
      "compare", "train and evaluate several GAN kinds across seeds");
  compare->add_option("--dataset", dataset_path, "input CSV")->required();
  compare->add_option("--out", out_dir, "output directory")->required();
  compare->add_option("--kinds", kinds_csv, "comma-separated kinds");
  compare->add_option("--seeds", seeds_csv, "comma-separated seeds");
  add_common(compare, true);

  CLI::App* make_data = app.add_subcommand(
      "make-data", "write a synthetic dataset CSV (toy or a named stand-in)");
  make_data->add_option("--name", data_name, "toy|cardio|thyroid|musk");
  make_data->add_option("--out", out_dir, "output CSV path")->required();
  make_data->add_option("--seed", theory_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!threshold_rule.empty())
      opt.score.threshold = ThresholdRule::parse(threshold_rule);
    if (!kind_name.empty()) {
      const double clip = opt.train.kind.clip;
      opt.train.kind = GanKind::parse(kind_name);
      if (opt.train.kind.kind == Gan::WGan && clip > 0.0)
        opt.train.kind.clip = clip;
    }

    if (theory->parsed())
      return cmd_theory_check(out_dir, theory_seed, fault_check);
    if (train_cmd->parsed()) return cmd_train(dataset_path, out_dir, opt);
    if (detect->parsed()) return cmd_detect(dataset_path, model_dir, out_dir, opt);
    if (evaluate->parsed()) return cmd_evaluate(scores_path, out_dir);
    if (recon->parsed())
      return cmd_recon_error(dataset_path, model_dir, out_dir, opt);
    if (compare->parsed())
      return cmd_compare(dataset_path, out_dir, kinds_csv, seeds_csv, opt);
    if (make_data->parsed()) return cmd_make_data(data_name, out_dir, theory_seed);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}
