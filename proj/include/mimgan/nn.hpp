#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimgan/rng.hpp"

namespace mimgan {

enum class Act { LeakyRelu, Sigmoid, Tanh, Identity };

struct Activation {
  Act kind = Act::Identity;
  double slope = 0.2;  // LeakyRelu only, must lie in (0,1)

  static Activation leaky_relu(double slope = 0.2) {
    if (!(slope > 0.0 && slope < 1.0))
      throw std::invalid_argument("leaky_relu slope must be in (0,1)");
    return {Act::LeakyRelu, slope};
  }
  static Activation sigmoid() { return {Act::Sigmoid, 0.0}; }
  static Activation tanh() { return {Act::Tanh, 0.0}; }
  static Activation identity() { return {Act::Identity, 0.0}; }

  double apply(double z) const {
    switch (kind) {
      case Act::LeakyRelu: return z >= 0.0 ? z : slope * z;
      case Act::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
      case Act::Tanh: return std::tanh(z);
      case Act::Identity: return z;
    }
    return z;
  }

  // Derivative expressed through pre-activation z and output o = apply(z).
  double derivative(double z, double o) const {
    switch (kind) {
      case Act::LeakyRelu: return z >= 0.0 ? 1.0 : slope;
      case Act::Sigmoid: return o * (1.0 - o);
      case Act::Tanh: return 1.0 - o * o;
      case Act::Identity: return 1.0;
    }
    return 1.0;
  }

  std::string to_string() const {
    switch (kind) {
      case Act::LeakyRelu: {
        nlohmann::json j = slope;  // shortest round-trip formatting
        return "leaky_relu:" + j.dump();
      }
      case Act::Sigmoid: return "sigmoid";
      case Act::Tanh: return "tanh";
      case Act::Identity: return "identity";
    }
    return "identity";
  }

  static Activation parse(const std::string& s) {
    if (s == "sigmoid") return sigmoid();
    if (s == "tanh") return tanh();
    if (s == "identity") return identity();
    if (s.rfind("leaky_relu:", 0) == 0)
      return leaky_relu(std::stod(s.substr(11)));
    throw std::invalid_argument("unknown activation: " + s);
  }
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n_params, double learning_rate = 1e-4)
      : m(n_params, 0.0), v(n_params, 0.0), lr(learning_rate) {
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("adam betas must be in (0,1)");
  }

  // Standard bias-corrected Adam update, in place.
  void step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
      throw std::invalid_argument("adam_step: shape mismatch");
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

// Dense feed-forward network with exact analytic backpropagation for both
// parameter and input gradients. Parameters live in one flat vector, laid
// out layer by layer as row-major weights [out x in] followed by biases.
class Mlp {
 public:
  Mlp(std::vector<int> layer_sizes, std::vector<Activation> activations,
      std::uint64_t seed)
      : sizes_(std::move(layer_sizes)),
        acts_(std::move(activations)),
        seed_(seed) {
    if (sizes_.size() < 2)
      throw std::invalid_argument("init_mlp: need at least 2 layer sizes");
    if (acts_.size() != sizes_.size() - 1)
      throw std::invalid_argument(
          "init_mlp: activations length must equal layer count");
    for (const int s : sizes_)
      if (s < 1) throw std::invalid_argument("init_mlp: layer size < 1");

    offsets_.reserve(layer_count());
    std::size_t total = 0;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      offsets_.push_back(total);
      total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);

    // Glorot-uniform weights, zero biases; draw order is fixed so a given
    // seed always produces the same bytes.
    Rng rng(seed);
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const int fan_in = sizes_[l];
      const int fan_out = sizes_[l + 1];
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      double* w = params_.data() + offsets_[l];
      for (int i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-a, a);
    }
  }

  std::size_t layer_count() const { return sizes_.size() - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  const std::vector<Activation>& activations() const { return acts_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t version() const { return version_; }

  const std::vector<double>& params() const { return params_; }

  std::vector<double>& mutable_params() {
    ++version_;
    return params_;
  }

  void set_params(std::vector<double> p) {
    if (p.size() != params_.size())
      throw std::invalid_argument("set_params: size mismatch");
    params_ = std::move(p);
    ++version_;
  }

  // Clamp every parameter into [-c, c].
  void clip_params(double c) {
    for (double& p : params_) p = std::clamp(p, -c, c);
    ++version_;
  }

  struct Tape {
    // acts[0] is the input, acts[l+1] the output of layer l.
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> preacts;
    std::uint64_t version = 0;
    const std::vector<double>& output() const { return acts.back(); }
  };

  Tape forward_tape(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim())
      throw std::invalid_argument("forward: input dimension mismatch");
    Tape tape;
    tape.version = version_;
    tape.acts.reserve(layer_count() + 1);
    tape.preacts.reserve(layer_count());
    tape.acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      const double* w = params_.data() + offsets_[l];
      const double* b = w + static_cast<std::size_t>(out) * in;
      const std::vector<double>& a = tape.acts.back();
      std::vector<double> z(out);
      for (int i = 0; i < out; ++i) {
        double s = b[i];
        const double* wrow = w + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) s += wrow[j] * a[j];
        z[i] = s;
      }
      std::vector<double> o(out);
      for (int i = 0; i < out; ++i) o[i] = acts_[l].apply(z[i]);
      tape.preacts.push_back(std::move(z));
      tape.acts.push_back(std::move(o));
    }
    return tape;
  }

  std::vector<double> forward(std::span<const double> x) const {
    return forward_tape(x).output();
  }

  struct Gradients {
    std::vector<double> params;  // same layout as Mlp::params()
    std::vector<double> input;   // dLoss/dx
  };

  Gradients backward(const Tape& tape, std::span<const double> dloss_dy) const {
    if (tape.version != version_)
      throw std::runtime_error(
          "backward: stale tape (parameters changed since forward)");
    if (static_cast<int>(dloss_dy.size()) != output_dim())
      throw std::invalid_argument("backward: output gradient dimension mismatch");

    Gradients g;
    g.params.assign(params_.size(), 0.0);
    std::vector<double> delta(dloss_dy.begin(), dloss_dy.end());
    for (std::size_t li = layer_count(); li-- > 0;) {
      const int in = sizes_[li];
      const int out = sizes_[li + 1];
      const std::vector<double>& a = tape.acts[li];
      const std::vector<double>& z = tape.preacts[li];
      const std::vector<double>& o = tape.acts[li + 1];
      // delta through the activation
      for (int i = 0; i < out; ++i) delta[i] *= acts_[li].derivative(z[i], o[i]);

      double* dw = g.params.data() + offsets_[li];
      double* db = dw + static_cast<std::size_t>(out) * in;
      const double* w = params_.data() + offsets_[li];
      std::vector<double> prev(in, 0.0);
      for (int i = 0; i < out; ++i) {
        const double d = delta[i];
        double* dwrow = dw + static_cast<std::size_t>(i) * in;
        const double* wrow = w + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) {
          dwrow[j] = d * a[j];
          prev[j] += wrow[j] * d;
        }
        db[i] = d;
      }
      delta = std::move(prev);
    }
    g.input = std::move(delta);
    return g;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["layer_sizes"] = sizes_;
    std::vector<std::string> acts;
    acts.reserve(acts_.size());
    for (const Activation& a : acts_) acts.push_back(a.to_string());
    j["activations"] = acts;
    j["params"] = params_;
    j["seed"] = seed_;
    return j;
  }

  static Mlp from_json(const nlohmann::json& j) {
    std::vector<Activation> acts;
    for (const auto& s : j.at("activations"))
      acts.push_back(Activation::parse(s.get<std::string>()));
    Mlp net(j.at("layer_sizes").get<std::vector<int>>(), std::move(acts),
            j.at("seed").get<std::uint64_t>());
    net.set_params(j.at("params").get<std::vector<double>>());
    return net;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Activation> acts_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t version_ = 0;
};

inline Mlp init_mlp(std::uint64_t seed, std::vector<int> layer_sizes,
                    std::vector<Activation> activations) {
  return Mlp(std::move(layer_sizes), std::move(activations), seed);
}

}  // namespace mimgan
