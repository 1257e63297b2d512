#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimgan/nn.hpp"

namespace mimgan {

// The four two-player games, identified by the (f, g) pair of the shared
// objective form L(D,G) = E_P[f(D(x))] + E_Pg[g(D(G(z)))]:
//   original: f(u) = ln(u),        g(u) = ln(1-u)      (min_G max_D)
//   lsgan:    f(u) = -1/2 (u-1)^2, g(u) = -1/2 u^2     (max_G min_D)
//   wgan:     f(u) = u,            g(u) = -u           (min_G max_D, 1-Lipschitz D)
//   mim:      f(u) = -exp(1-u),    g(u) = -exp(u)      (max_G min_D)
enum class Gan { Original, LsGan, WGan, Mim };

struct GanKind {
  Gan kind = Gan::Mim;
  double clip = 0.01;  // WGAN weight-clipping bound, must be > 0

  static GanKind original() { return {Gan::Original, 0.0}; }
  static GanKind lsgan() { return {Gan::LsGan, 0.0}; }
  static GanKind wgan(double clip = 0.01) {
    if (!(clip > 0.0)) throw std::invalid_argument("wgan clip must be > 0");
    return {Gan::WGan, clip};
  }
  static GanKind mim() { return {Gan::Mim, 0.0}; }

  std::string to_string() const {
    switch (kind) {
      case Gan::Original: return "original";
      case Gan::LsGan: return "lsgan";
      case Gan::WGan: return "wgan";
      case Gan::Mim: return "mim";
    }
    return "mim";
  }

  static GanKind parse(const std::string& s) {
    if (s == "original") return original();
    if (s == "lsgan") return lsgan();
    if (s == "wgan") return wgan();
    if (s == "mim") return mim();
    throw std::invalid_argument("unknown GAN kind: " + s);
  }
};

enum class PlayerRole { Discriminator, Generator };

namespace detail {

// Discriminator outputs feeding a logarithm are clamped away from {0,1};
// sigmoid saturation would otherwise produce -inf.
constexpr double kLogGuard = 1e-7;

inline double clamp_unit(double u) {
  if (u < 0.0 || u > 1.0)
    throw std::domain_error("original GAN expects D output in [0,1]");
  return std::clamp(u, kLogGuard, 1.0 - kLogGuard);
}

}  // namespace detail

inline double f_term(const GanKind& k, double u) {
  switch (k.kind) {
    case Gan::Original: return std::log(detail::clamp_unit(u));
    case Gan::LsGan: return -0.5 * (u - 1.0) * (u - 1.0);
    case Gan::WGan: return u;
    case Gan::Mim: return -std::exp(1.0 - u);
  }
  return 0.0;
}

inline double g_term(const GanKind& k, double u) {
  switch (k.kind) {
    case Gan::Original: return std::log(1.0 - detail::clamp_unit(u));
    case Gan::LsGan: return -0.5 * u * u;
    case Gan::WGan: return -u;
    case Gan::Mim: return -std::exp(u);
  }
  return 0.0;
}

// Scalar loss to MINIMIZE by the given player's optimizer. The minmax/maxmin
// direction of each game is folded in here, once, so the trainer only ever
// descends.
inline double batch_loss(const GanKind& k, PlayerRole role,
                         std::span<const double> d_real,
                         std::span<const double> d_fake) {
  if (d_fake.empty()) throw std::invalid_argument("batch_loss: empty batch");
  if (role == PlayerRole::Discriminator && d_real.empty())
    throw std::invalid_argument("batch_loss: empty batch");

  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());

  double real = 0.0;
  if (role == PlayerRole::Discriminator)
    for (const double u : d_real) real += f_term(k, u);
  double fake = 0.0;
  for (const double u : d_fake) fake += g_term(k, u);

  // In the shared form the game is always min_G max_D L, so the
  // discriminator descends -L and the generator descends +E[g]. The maxmin
  // games (lsgan, mim) are the same thing with L negated; e.g. the mim
  // discriminator loss comes out as mean[exp(1-D(x))] + mean[exp(D(G(z)))]
  // and the mim generator loss as -mean[exp(D(G(z)))].
  switch (role) {
    case PlayerRole::Discriminator: return -(real / nr + fake / nf);
    case PlayerRole::Generator: return fake / nf;
  }
  return 0.0;
}

struct BatchGrads {
  std::vector<double> d_real;
  std::vector<double> d_fake;
};

// Gradient of batch_loss with respect to every discriminator output,
// evaluated at the clamped value where a clamp applies.
inline BatchGrads loss_grad(const GanKind& k, PlayerRole role,
                            std::span<const double> d_real,
                            std::span<const double> d_fake) {
  if (d_fake.empty()) throw std::invalid_argument("loss_grad: empty batch");
  if (role == PlayerRole::Discriminator && d_real.empty())
    throw std::invalid_argument("loss_grad: empty batch");

  const double nr = d_real.empty() ? 1.0 : static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());

  // d f / du and d g / du per kind.
  const auto df = [&](double u) -> double {
    switch (k.kind) {
      case Gan::Original: return 1.0 / detail::clamp_unit(u);
      case Gan::LsGan: return -(u - 1.0);
      case Gan::WGan: return 1.0;
      case Gan::Mim: return std::exp(1.0 - u);
    }
    return 0.0;
  };
  const auto dg = [&](double u) -> double {
    switch (k.kind) {
      case Gan::Original: return -1.0 / (1.0 - detail::clamp_unit(u));
      case Gan::LsGan: return -u;
      case Gan::WGan: return -1.0;
      case Gan::Mim: return -std::exp(u);
    }
    return 0.0;
  };

  // Discriminator loss is -(mean f + mean g), generator loss is +mean g.
  const double sign = role == PlayerRole::Discriminator ? -1.0 : 1.0;

  BatchGrads g;
  if (role == PlayerRole::Discriminator) {
    g.d_real.resize(d_real.size());
    for (std::size_t i = 0; i < d_real.size(); ++i)
      g.d_real[i] = sign * df(d_real[i]) / nr;
  }
  g.d_fake.resize(d_fake.size());
  for (std::size_t i = 0; i < d_fake.size(); ++i)
    g.d_fake[i] = sign * dg(d_fake[i]) / nf;
  return g;
}

// WGAN's 1-Lipschitz constraint via weight clipping, in place.
inline void enforce_lipschitz(const GanKind& k, Mlp& net) {
  if (k.kind != Gan::WGan)
    throw std::invalid_argument("enforce_lipschitz: kind is not wgan");
  net.clip_params(k.clip);
}

}  // namespace mimgan
