#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimgan/data.hpp"
#include "mimgan/nn.hpp"
#include "mimgan/objectives.hpp"
#include "mimgan/parallel.hpp"
#include "mimgan/rng.hpp"

namespace mimgan {

class TrainingDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  GanKind kind = GanKind::mim();
  int iterations = 1000;
  int batch_size = 64;
  int latent_dim = 0;  // 0 derives max(8, ceil(feature_dim / 4))
  double lr = 1e-4;
  int d_steps_per_iter = 1;
  int g_steps_per_iter = 1;
  std::array<int, 2> hidden_widths{64, 32};  // four layers in total
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (latent_dim < 0) throw std::invalid_argument("latent_dim must be >= 1");
    if (d_steps_per_iter < 1 || g_steps_per_iter < 1)
      throw std::invalid_argument("player steps per iteration must be >= 1");
    if (hidden_widths[0] < 1 || hidden_widths[1] < 1)
      throw std::invalid_argument("hidden widths must be >= 1");
  }

  int resolved_latent_dim(std::size_t feature_dim) const {
    if (latent_dim > 0) return latent_dim;
    return std::max<int>(8, static_cast<int>((feature_dim + 3) / 4));
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", kind.to_string()},
                          {"clip", kind.clip},
                          {"iterations", iterations},
                          {"batch_size", batch_size},
                          {"latent_dim", latent_dim},
                          {"lr", lr},
                          {"d_steps_per_iter", d_steps_per_iter},
                          {"g_steps_per_iter", g_steps_per_iter},
                          {"hidden_widths", hidden_widths},
                          {"seed", seed}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.kind = GanKind::parse(j.at("kind").get<std::string>());
    if (c.kind.kind == Gan::WGan && j.contains("clip"))
      c.kind.clip = j.at("clip").get<double>();
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<int>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("latent_dim")) c.latent_dim = j.at("latent_dim").get<int>();
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("d_steps_per_iter"))
      c.d_steps_per_iter = j.at("d_steps_per_iter").get<int>();
    if (j.contains("g_steps_per_iter"))
      c.g_steps_per_iter = j.at("g_steps_per_iter").get<int>();
    if (j.contains("hidden_widths"))
      c.hidden_widths = j.at("hidden_widths").get<std::array<int, 2>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  }
};

struct LossRecord {
  int iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
};

struct TrainedGan {
  Mlp discriminator;  // sigmoid output, scalar
  Mlp generator;      // tanh output, feature_dim outputs
  TrainConfig config;
  std::size_t feature_dim = 0;
  Scaler scaler;  // attached by the pipeline; empty means identity
  std::vector<LossRecord> history;

  int latent_dim() const { return generator.input_dim(); }

  double discriminate(std::span<const double> x) const {
    return discriminator.forward(x)[0];
  }
  std::vector<double> generate(std::span<const double> z) const {
    return generator.forward(z);
  }
};

namespace detail {

inline void check_finite(double loss, int iteration, const char* player) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "training diverged: iteration " << iteration << ", player " << player
       << ", loss " << loss;
    throw TrainingDivergedError(os.str());
  }
}

}  // namespace detail

// Alternating two-player training on a pre-scaled feature matrix
// (row-major, values in [-1, 1]). Deterministic for a given config.
inline TrainedGan train(const TrainConfig& config,
                        std::span<const double> features, std::size_t n,
                        std::size_t d) {
  config.validate();
  if (n * d != features.size())
    throw std::invalid_argument("train: feature matrix shape mismatch");
  if (n < static_cast<std::size_t>(config.batch_size))
    throw std::invalid_argument("train: need at least batch_size rows");
  for (const double v : features)
    if (!(std::abs(v) <= 1.0 + 1e-9))
      throw std::invalid_argument("train: features must be scaled to [-1, 1]");

  const int latent = config.resolved_latent_dim(d);
  const auto [h0, h1] = config.hidden_widths;

  TrainedGan gan{
      Mlp({static_cast<int>(d), h0, h1, 1},
          {Activation::leaky_relu(), Activation::leaky_relu(), Activation::sigmoid()},
          mix_seed("discriminator", config.seed)),
      Mlp({latent, h0, h1, static_cast<int>(d)},
          {Activation::leaky_relu(), Activation::leaky_relu(), Activation::tanh()},
          mix_seed("generator", config.seed)),
      config,
      d,
      Scaler{},
      {}};

  AdamState d_opt(gan.discriminator.params().size(), config.lr);
  AdamState g_opt(gan.generator.params().size(), config.lr);
  Rng rng(mix_seed("train", config.seed));

  const int bs = config.batch_size;
  std::vector<double> z(latent);
  std::vector<double> d_real(bs), d_fake(bs);
  gan.history.reserve(config.iterations);

  for (int it = 0; it < config.iterations; ++it) {
    double d_loss_sum = 0.0;

    for (int step = 0; step < config.d_steps_per_iter; ++step) {
      std::vector<Mlp::Tape> real_tapes, fake_tapes;
      real_tapes.reserve(bs);
      fake_tapes.reserve(bs);
      for (int b = 0; b < bs; ++b) {
        const std::size_t row = rng.below(n);
        real_tapes.push_back(
            gan.discriminator.forward_tape(features.subspan(row * d, d)));
        d_real[b] = real_tapes.back().output()[0];
      }
      for (int b = 0; b < bs; ++b) {
        for (double& zi : z) zi = rng.uniform(-1.0, 1.0);
        fake_tapes.push_back(gan.discriminator.forward_tape(gan.generate(z)));
        d_fake[b] = fake_tapes.back().output()[0];
      }
      const double loss =
          batch_loss(config.kind, PlayerRole::Discriminator, d_real, d_fake);
      detail::check_finite(loss, it, "discriminator");
      d_loss_sum += loss;

      const BatchGrads head =
          loss_grad(config.kind, PlayerRole::Discriminator, d_real, d_fake);
      std::vector<double> grads(gan.discriminator.params().size(), 0.0);
      for (int b = 0; b < bs; ++b) {
        const double gr[1] = {head.d_real[b]};
        const Mlp::Gradients g = gan.discriminator.backward(real_tapes[b], gr);
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.params[i];
      }
      for (int b = 0; b < bs; ++b) {
        const double gf[1] = {head.d_fake[b]};
        const Mlp::Gradients g = gan.discriminator.backward(fake_tapes[b], gf);
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.params[i];
      }
      d_opt.step(gan.discriminator.mutable_params(), grads);
      if (config.kind.kind == Gan::WGan)
        enforce_lipschitz(config.kind, gan.discriminator);
    }

    double g_loss_sum = 0.0;
    for (int step = 0; step < config.g_steps_per_iter; ++step) {
      std::vector<Mlp::Tape> gen_tapes, disc_tapes;
      gen_tapes.reserve(bs);
      disc_tapes.reserve(bs);
      for (int b = 0; b < bs; ++b) {
        for (double& zi : z) zi = rng.uniform(-1.0, 1.0);
        gen_tapes.push_back(gan.generator.forward_tape(z));
        disc_tapes.push_back(
            gan.discriminator.forward_tape(gen_tapes.back().output()));
        d_fake[b] = disc_tapes.back().output()[0];
      }
      const double loss = batch_loss(config.kind, PlayerRole::Generator, {}, d_fake);
      detail::check_finite(loss, it, "generator");
      g_loss_sum += loss;

      const BatchGrads head =
          loss_grad(config.kind, PlayerRole::Generator, {}, d_fake);
      std::vector<double> grads(gan.generator.params().size(), 0.0);
      for (int b = 0; b < bs; ++b) {
        const double gf[1] = {head.d_fake[b]};
        const Mlp::Gradients through_d =
            gan.discriminator.backward(disc_tapes[b], gf);
        const Mlp::Gradients g =
            gan.generator.backward(gen_tapes[b], through_d.input);
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.params[i];
      }
      g_opt.step(gan.generator.mutable_params(), grads);
    }

    gan.history.push_back({it, d_loss_sum / config.d_steps_per_iter,
                           g_loss_sum / config.g_steps_per_iter});
  }
  return gan;
}

inline TrainedGan train(const TrainConfig& config, const Dataset& scaled) {
  return train(config, scaled.features, scaled.n, scaled.d);
}

inline void save_loss_history(const TrainedGan& gan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "iteration,d_loss,g_loss\n";
  char buf[96];
  for (const LossRecord& r : gan.history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.iteration, r.d_loss,
                  r.g_loss);
    out << buf;
  }
}

// Checkpoint layout: discriminator.json + generator.json + config.json
// (training config, feature dim, scaler) and the loss history CSV.
inline void save_checkpoint(const TrainedGan& gan, const std::string& dir) {
  const auto dump = [](const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
  };
  dump(gan.discriminator.to_json(), dir + "/discriminator.json");
  dump(gan.generator.to_json(), dir + "/generator.json");
  nlohmann::json cfg;
  cfg["train"] = gan.config.to_json();
  cfg["feature_dim"] = gan.feature_dim;
  cfg["scaler"] = gan.scaler.to_json();
  dump(cfg, dir + "/config.json");
  save_loss_history(gan, dir + "/loss_history.csv");
}

inline TrainedGan load_checkpoint(const std::string& dir) {
  const auto parse = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("checkpoint not found: " + path);
    return nlohmann::json::parse(in);
  };
  const nlohmann::json cfg = parse(dir + "/config.json");
  TrainedGan gan{Mlp::from_json(parse(dir + "/discriminator.json")),
                 Mlp::from_json(parse(dir + "/generator.json")),
                 TrainConfig::from_json(cfg.at("train")),
                 cfg.at("feature_dim").get<std::size_t>(),
                 Scaler::from_json(cfg.at("scaler")),
                 {}};
  return gan;
}

}  // namespace mimgan
