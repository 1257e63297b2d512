#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimgan/data.hpp"
#include "mimgan/metrics.hpp"
#include "mimgan/parallel.hpp"
#include "mimgan/rng.hpp"
#include "mimgan/trainer.hpp"

namespace mimgan {

struct InversionParams {
  int iterations = 200;
  int restarts = 3;
  double lr = 0.003;
  int p_norm = 2;
  double lambda = 0.1;  // weight of the regularizer inside the search loss

  void validate() const {
    if (iterations < 1 || restarts < 1)
      throw std::invalid_argument("inversion iterations/restarts must be >= 1");
    if (p_norm < 1) throw std::invalid_argument("p_norm must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("lambda must be in [0, 1]");
  }

  InversionParams without_regularizer() const {
    InversionParams p = *this;
    p.lambda = 0.0;
    return p;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"iterations", iterations},
                          {"restarts", restarts},
                          {"lr", lr},
                          {"p_norm", p_norm},
                          {"lambda", lambda}};
  }
  static InversionParams from_json(const nlohmann::json& j) {
    InversionParams p;
    if (j.contains("iterations")) p.iterations = j.at("iterations").get<int>();
    if (j.contains("restarts")) p.restarts = j.at("restarts").get<int>();
    if (j.contains("lr")) p.lr = j.at("lr").get<double>();
    if (j.contains("p_norm")) p.p_norm = j.at("p_norm").get<int>();
    if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
    p.validate();
    return p;
  }
};

struct ThresholdRule {
  enum class Kind { Fixed, ContaminationQuantile };
  Kind kind = Kind::ContaminationQuantile;
  double value = 0.0;   // threshold for Fixed, rate for ContaminationQuantile
  bool auto_rate = true;  // derive the rate from the dataset's anomaly share

  static ThresholdRule fixed(double gamma) {
    return {Kind::Fixed, gamma, false};
  }
  static ThresholdRule contamination(double rate) {
    if (!(rate > 0.0 && rate < 1.0))
      throw std::invalid_argument("contamination rate must be in (0,1)");
    return {Kind::ContaminationQuantile, rate, false};
  }
  static ThresholdRule contamination_auto() {
    return {Kind::ContaminationQuantile, 0.0, true};
  }

  std::string to_string() const {
    if (kind == Kind::Fixed) return "fixed:" + std::to_string(value);
    return auto_rate ? std::string("contamination:auto")
                     : "contamination:" + std::to_string(value);
  }
  static ThresholdRule parse(const std::string& s) {
    if (s.rfind("fixed:", 0) == 0) return fixed(std::stod(s.substr(6)));
    if (s == "contamination:auto") return contamination_auto();
    if (s.rfind("contamination:", 0) == 0)
      return contamination(std::stod(s.substr(14)));
    throw std::invalid_argument("unknown threshold rule: " + s);
  }
};

struct ScoreParams {
  double eta = 0.05;
  double beta = 1.0;
  InversionParams inversion;
  ThresholdRule threshold = ThresholdRule::contamination_auto();

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0))
      throw std::invalid_argument("eta must be in [0, 1]");
    inversion.validate();
  }
};

// Numerically stable softplus, ln(1 + exp(x)).
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid cross entropy of a discriminator output against target weight
// beta: -beta ln(sigma(d)) - (1-beta) ln(1 - sigma(d)), in log-sum-exp form
// so large |d| cannot overflow.
inline double sigmoid_ce(double d_out, double beta) {
  return beta * softplus(-d_out) + (1.0 - beta) * softplus(d_out);
}

// d/dd of sigmoid_ce.
inline double sigmoid_ce_grad(double d_out, double beta) {
  return logistic(d_out) - beta;
}

namespace detail {

inline double p_norm(std::span<const double> r, int p) {
  if (p == 2) {
    double s = 0.0;
    for (const double v : r) s += v * v;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (const double v : r) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

// Gradient of ||r||_p with respect to r.
inline std::vector<double> p_norm_grad(std::span<const double> r, int p,
                                       double norm) {
  std::vector<double> g(r.size(), 0.0);
  if (norm < 1e-12) return g;
  if (p == 2) {
    for (std::size_t i = 0; i < r.size(); ++i) g[i] = r[i] / norm;
    return g;
  }
  const double scale = std::pow(norm, 1.0 - p);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    g[i] = (r[i] >= 0.0 ? 1.0 : -1.0) * std::pow(a, p - 1) * scale;
  }
  return g;
}

struct JWithGrad {
  double j = 0.0;
  std::vector<double> dz;
};

// J_error(x, z) = (1-lambda) ||x - G(z)||_p + lambda H_ce(D(G(z)), 1) and
// its gradient with respect to z, chained through both networks.
inline JWithGrad j_error_with_grad(std::span<const double> x,
                                   std::span<const double> z,
                                   const TrainedGan& gan,
                                   const InversionParams& params,
                                   bool want_grad) {
  const Mlp::Tape g_tape = gan.generator.forward_tape(z);
  const std::vector<double>& xg = g_tape.output();
  if (x.size() != xg.size())
    throw std::invalid_argument("j_error: dimension mismatch");

  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - xg[i];
  const double norm = p_norm(r, params.p_norm);

  JWithGrad out;
  out.j = (1.0 - params.lambda) * norm;

  std::optional<Mlp::Tape> d_tape;
  double d_out = 0.0;
  if (params.lambda != 0.0) {
    d_tape = gan.discriminator.forward_tape(xg);
    d_out = d_tape->output()[0];
    out.j += params.lambda * sigmoid_ce(d_out, 1.0);
  }
  if (!want_grad) return out;

  // dJ/dG(z), then back through the generator.
  std::vector<double> dj_dxg = p_norm_grad(r, params.p_norm, norm);
  for (double& v : dj_dxg) v *= -(1.0 - params.lambda);  // d r / d xg = -1
  if (params.lambda != 0.0) {
    const double head[1] = {params.lambda * sigmoid_ce_grad(d_out, 1.0)};
    const Mlp::Gradients through_d = gan.discriminator.backward(*d_tape, head);
    for (std::size_t i = 0; i < dj_dxg.size(); ++i)
      dj_dxg[i] += through_d.input[i];
  }
  out.dz = gan.generator.backward(g_tape, dj_dxg).input;
  return out;
}

}  // namespace detail

inline double j_error(std::span<const double> x, std::span<const double> z,
                      const TrainedGan& gan, const InversionParams& params) {
  params.validate();
  return detail::j_error_with_grad(x, z, gan, params, false).j;
}

struct InversionResult {
  std::vector<double> z_opt;
  double j = std::numeric_limits<double>::infinity();
  int discarded_restarts = 0;
};

// Best z over `restarts` independent Adam descents; each restart draws its
// start uniformly from [-1,1]^latent under seed (seed, restart). A restart
// whose trajectory leaves the finite range is discarded.
inline InversionResult invert_latent_full(std::span<const double> x,
                                          const TrainedGan& gan,
                                          const InversionParams& params,
                                          std::uint64_t seed) {
  params.validate();
  const int latent = gan.latent_dim();
  InversionResult best;
  for (int restart = 0; restart < params.restarts; ++restart) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
    std::vector<double> z(latent);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);

    AdamState opt(z.size(), params.lr);
    bool diverged = false;
    for (int it = 0; it <= params.iterations; ++it) {
      const bool last = it == params.iterations;
      detail::JWithGrad eval =
          detail::j_error_with_grad(x, z, gan, params, !last);
      if (!std::isfinite(eval.j)) {
        diverged = true;
        break;
      }
      if (eval.j < best.j) {
        best.j = eval.j;
        best.z_opt = z;
      }
      if (last) break;
      opt.step(z, eval.dz);
      for (const double v : z)
        if (!std::isfinite(v)) {
          diverged = true;
          break;
        }
      if (diverged) break;
    }
    if (diverged) ++best.discarded_restarts;
  }
  if (best.z_opt.empty())
    throw std::runtime_error("invert_latent: all restarts diverged");
  return best;
}

inline std::vector<double> invert_latent(std::span<const double> x,
                                         const TrainedGan& gan,
                                         const InversionParams& params,
                                         std::uint64_t seed) {
  return invert_latent_full(x, gan, params, seed).z_opt;
}

// Eq-style anomaly score: (1-eta) J_error(x, z_opt) + eta H_ce(D(x), beta).
inline double anomaly_score(std::span<const double> x, const TrainedGan& gan,
                            const ScoreParams& params, std::uint64_t seed) {
  params.validate();
  const InversionResult inv = invert_latent_full(x, gan, params.inversion, seed);
  const double d_x = gan.discriminate(x);
  return (1.0 - params.eta) * inv.j + params.eta * sigmoid_ce(d_x, params.beta);
}

// Min-max normalization to [0,1]; a constant vector maps to all zeros.
inline std::vector<double> normalize_scores(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_scores: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(raw.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / (hi - lo);
  return out;
}

// Label 1 iff score > Gamma. For the contamination rule, Gamma is the
// empirical (1-rate) quantile, taken as the ceil((1-rate) N)-th smallest
// score; samples tied with Gamma are not flagged, so between
// floor(rate N) and ceil(rate N) samples come out anomalous.
inline std::vector<int> decide(std::span<const double> normalized,
                               const ThresholdRule& rule) {
  if (rule.kind == ThresholdRule::Kind::ContaminationQuantile && rule.auto_rate)
    throw std::invalid_argument("decide: contamination rate not resolved");
  double gamma = rule.value;
  if (rule.kind == ThresholdRule::Kind::ContaminationQuantile) {
    if (!(rule.value > 0.0 && rule.value < 1.0))
      throw std::invalid_argument("decide: rate must be in (0,1)");
    std::vector<double> sorted(normalized.begin(), normalized.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = (1.0 - rule.value) * static_cast<double>(sorted.size());
    std::size_t k = static_cast<std::size_t>(std::ceil(rank));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    gamma = sorted[k - 1];
  }
  std::vector<int> labels(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i)
    labels[i] = normalized[i] > gamma ? 1 : 0;
  return labels;
}

struct ScoredSample {
  int index = 0;
  double raw_score = 0.0;
  double normalized_score = 0.0;
  int predicted_label = 0;
  std::vector<double> z_opt;
};

inline void save_scores_csv(const std::vector<ScoredSample>& samples,
                            const std::optional<std::vector<int>>& true_labels,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "index,raw_score,normalized_score,predicted_label";
  if (true_labels) out << ",true_label";
  out << "\n";
  char buf[96];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ScoredSample& s = samples[i];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d", s.index, s.raw_score,
                  s.normalized_score, s.predicted_label);
    out << buf;
    if (true_labels) out << "," << (*true_labels)[i];
    out << "\n";
  }
}

struct PipelineResult {
  TrainedGan gan;
  Dataset test_scaled;
  std::vector<ScoredSample> samples;
  std::optional<EvalReport> report;
  double resolved_threshold_rate = 0.0;
};

// Algorithm: split, scale on the training split only, train the chosen
// game label-blind, score every test sample by latent inversion, min-max
// normalize, threshold. Labels are touched only by the final evaluation.
inline PipelineResult run_pipeline(const Dataset& dataset,
                                   const TrainConfig& train_config,
                                   const ScoreParams& score_params,
                                   const SplitSpec& split_spec,
                                   unsigned n_threads = 0) {
  score_params.validate();
  auto [train_split, test_split] = split(dataset, split_spec);
  const Scaler scaler = scale_fit(train_split);
  const Dataset train_scaled = scale_apply(scaler, train_split);
  const Dataset test_scaled = scale_apply(scaler, test_split);

  TrainedGan gan = train(train_config, train_scaled);
  gan.scaler = scaler;

  PipelineResult result{std::move(gan), test_scaled, {}, std::nullopt, 0.0};
  const Dataset& test = result.test_scaled;

  std::vector<double> raw(test.n, 0.0);
  std::vector<std::vector<double>> zs(test.n);
  parallel_for(test.n, n_threads, [&](std::size_t i) {
    const std::uint64_t seed = mix_seed("score", static_cast<std::uint64_t>(i));
    const InversionResult inv =
        invert_latent_full(test.row(i), result.gan, score_params.inversion, seed);
    const double d_x = result.gan.discriminate(test.row(i));
    raw[i] = (1.0 - score_params.eta) * inv.j +
             score_params.eta * sigmoid_ce(d_x, score_params.beta);
    zs[i] = inv.z_opt;
  });

  const std::vector<double> normalized = normalize_scores(raw);

  ThresholdRule rule = score_params.threshold;
  if (rule.kind == ThresholdRule::Kind::ContaminationQuantile && rule.auto_rate) {
    if (!dataset.labels)
      throw std::invalid_argument(
          "run_pipeline: automatic contamination rate needs labels; pass an "
          "explicit threshold rule");
    const double rate =
        static_cast<double>(dataset.anomaly_count()) / static_cast<double>(dataset.n);
    rule = ThresholdRule::contamination(rate);
  }
  if (rule.kind == ThresholdRule::Kind::ContaminationQuantile)
    result.resolved_threshold_rate = rule.value;
  const std::vector<int> predicted = decide(normalized, rule);

  result.samples.resize(test.n);
  for (std::size_t i = 0; i < test.n; ++i)
    result.samples[i] = {static_cast<int>(i), raw[i], normalized[i], predicted[i],
                         std::move(zs[i])};

  if (test.labels)
    result.report = EvalReport::from_predictions(raw, *test.labels, predicted);
  return result;
}

// Mean over samples of the smallest ||G(z) - x||_2 found by latent
// inversion with the regularizer off. Samples whose inversion diverges are
// skipped; more than 10% skipped is an error.
inline double reconstruction_error(const TrainedGan& gan, const Dataset& test_scaled,
                                   const InversionParams& inversion,
                                   unsigned n_threads = 0) {
  if (test_scaled.n == 0)
    throw std::invalid_argument("reconstruction_error: empty test set");
  const InversionParams pure = inversion.without_regularizer();
  std::vector<double> errs(test_scaled.n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(test_scaled.n, n_threads, [&](std::size_t i) {
    const std::uint64_t seed = mix_seed("recon", static_cast<std::uint64_t>(i));
    try {
      errs[i] = invert_latent_full(test_scaled.row(i), gan, pure, seed).j;
    } catch (const std::runtime_error&) {
      // all restarts diverged; leave NaN
    }
  });
  double sum = 0.0;
  std::size_t skipped = 0;
  for (const double e : errs) {
    if (std::isnan(e))
      ++skipped;
    else
      sum += e;
  }
  if (skipped * 10 > test_scaled.n)
    throw std::runtime_error("reconstruction_error: more than 10% of samples "
                             "failed inversion");
  return sum / static_cast<double>(test_scaled.n - skipped);
}

}  // namespace mimgan
