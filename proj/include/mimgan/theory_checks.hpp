#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimgan/rng.hpp"
#include "mimgan/theory.hpp"

// Named verification checks over the closed-form results, runnable from the
// command line and from the acceptance suite. Each check draws its own
// seeded instances so a report is reproducible.
namespace mimgan::theory {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  int instances = 0;
  std::string note;

  nlohmann::json to_json() const {
    return nlohmann::json{{"check_name", name},
                          {"status", passed ? "pass" : "fail"},
                          {"max_error", max_error},
                          {"instances", instances},
                          {"note", note}};
  }
};

namespace checks_detail {

inline DiscretePair random_pair(Rng& rng, std::size_t n, double floor = 1e-3) {
  std::vector<double> p(n), pg(n);
  double sp = 0.0, spg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = floor + rng.uniform01();
    pg[i] = floor + rng.uniform01();
    sp += p[i];
    spg += pg[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    p[i] /= sp;
    pg[i] /= spg;
  }
  return DiscretePair(p, pg);
}

}  // namespace checks_detail

// `fault` names a check whose comparison gets a deliberately flipped sign;
// test fixtures use it to prove a failing check reaches the exit code.
inline std::vector<CheckResult> run_all_checks(std::uint64_t seed,
                                               const std::string& fault = "") {
  std::vector<CheckResult> results;
  const auto faulty = [&](const std::string& name) { return fault == name; };

  {  // (a) numeric minimizer of a exp(1-u) + b exp(u) vs closed form
    CheckResult r{"pointwise_minimizer", true, 0.0, 1000,
                  "golden section + derivative bisection vs 1/2 + ln(a/b)/2"};
    Rng rng(mix_seed("check-a", seed));
    for (int i = 0; i < r.instances; ++i) {
      const double a = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const double b = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const MinPair m = pointwise_min_check(a, b);
      const double offset = faulty(r.name) ? 1e-6 : 0.0;
      r.max_error = std::max(r.max_error,
                             std::abs(m.u_numeric - m.u_closed + offset));
    }
    r.passed = r.max_error < 1e-8;
    results.push_back(r);
  }

  {  // (b) objective bound 2 sqrt(e) with equality iff P = Pg
    CheckResult r{"objective_bound_2sqrte", true, 0.0, 1000,
                  "L_mim(D*) <= 2 sqrt(e), equality only at P = Pg"};
    Rng rng(mix_seed("check-b", seed));
    const double bound = 2.0 * std::sqrt(std::exp(1.0));
    bool ok = true;
    for (int i = 0; i < r.instances; ++i) {
      const DiscretePair pair = checks_detail::random_pair(rng, 2 + rng.below(8));
      const double v = objective_at_opt_mim(pair);
      r.max_error = std::max(r.max_error, v - bound);
      if (v > bound + 1e-12) ok = false;
      double gap = 0.0;
      for (std::size_t j = 0; j < pair.size(); ++j)
        gap = std::max(gap, std::abs(pair.p[j] - pair.pg[j]));
      if (std::abs(v - bound) < 1e-12 && gap > 1e-12) ok = false;
    }
    // equality case
    const DiscretePair same({0.3, 0.7}, {0.3, 0.7});
    const double eq_err = std::abs(objective_at_opt_mim(same) - bound) +
                          (faulty(r.name) ? 1e-6 : 0.0);
    r.max_error = std::max(r.max_error, eq_err);
    r.passed = ok && eq_err < 1e-12;
    results.push_back(r);
  }

  {  // (c) Renyi-divergence identity
    CheckResult r{"renyi_identity", true, 0.0, 1000,
                  "L_mim(D*) = sqrt(e) (e^{-R/2} + e^{-R'/2})"};
    Rng rng(mix_seed("check-c", seed));
    for (int i = 0; i < r.instances; ++i) {
      const DiscretePair pair = checks_detail::random_pair(rng, 2 + rng.below(10));
      const LhsRhs lr = renyi_equivalence_check(pair);
      const double offset = faulty(r.name) ? 1e-6 : 0.0;
      r.max_error = std::max(r.max_error, std::abs(lr.lhs - lr.rhs + offset));
    }
    r.passed = r.max_error < 1e-9;
    results.push_back(r);
  }

  {  // D* vector minimizes the per-event objective
    CheckResult r{"optimal_discriminator_minimizes", true, 0.0, 1000,
                  "D*_mim matches the per-event numeric minimizer"};
    Rng rng(mix_seed("check-dstar", seed));
    for (int i = 0; i < r.instances; ++i) {
      const DiscretePair pair = checks_detail::random_pair(rng, 2 + rng.below(6));
      const std::vector<double> d = optimal_discriminator(GanKind::mim(), pair);
      for (std::size_t j = 0; j < pair.size(); ++j) {
        const MinPair m = pointwise_min_check(pair.p[j], pair.pg[j]);
        r.max_error = std::max(r.max_error, std::abs(d[j] - m.u_numeric));
      }
    }
    if (faulty(r.name)) r.max_error += 1e-6;
    r.passed = r.max_error < 1e-8;
    results.push_back(r);
  }

  {  // (d) small-probability dominance on exact proportions
    CheckResult r{"smallprob_dominance_exact", true, 0.0, 1000,
                  "Y_mim >= Y_kl and Y_mim >= Y_ls on exact Bernoulli "
                  "proportions, equality iff q = p"};
    Rng rng(mix_seed("check-d", seed));
    const EventPartition part = EventPartition::of({0});
    bool ok = true;
    for (int i = 0; i < r.instances; ++i) {
      const double p = rng.uniform(1e-3, 0.1);
      double d = rng.uniform(0.01, 0.2) * p;
      if (rng.uniform01() < 0.5) d = -d;
      if (faulty(r.name)) d = 0.0;
      const DiscretePair pair({p, 1 - p}, {p + d, 1 - p - d});
      const double mim = small_prob_proportion_exact(GanKind::mim(), pair, part);
      const double kl =
          small_prob_proportion_exact(GanKind::original(), pair, part);
      const double ls = small_prob_proportion_exact(GanKind::lsgan(), pair, part);
      if (!(mim > kl) || !(mim > ls)) ok = false;
      r.max_error = std::max(r.max_error, std::max(kl - mim, ls - mim));
    }
    for (const double p : {0.001, 0.02, 0.1}) {  // equality branch
      const DiscretePair pair({p, 1 - p}, {p, 1 - p});
      const double mim = small_prob_proportion_exact(GanKind::mim(), pair, part);
      const double kl =
          small_prob_proportion_exact(GanKind::original(), pair, part);
      const double ls = small_prob_proportion_exact(GanKind::lsgan(), pair, part);
      if (std::abs(mim - kl) > 1e-12 || std::abs(mim - ls) > 1e-12) ok = false;
    }
    r.passed = ok;
    results.push_back(r);
  }

  {  // second-order approximation vs exact proportion
    CheckResult r{"smallprob_approx_vs_exact", true, 0.0, 1000,
                  "|approx - exact| <= 10 |q-p|^3 / p^2 over the sweep"};
    Rng rng(mix_seed("check-approx", seed));
    const EventPartition part = EventPartition::of({0});
    bool ok = true;
    for (int i = 0; i < r.instances; ++i) {
      const double p = rng.uniform(1e-3, 0.1);
      double d = rng.uniform(0.01, 0.2) * p;
      if (rng.uniform01() < 0.5) d = -d;
      const DiscretePair pair({p, 1 - p}, {p + d, 1 - p - d});
      const double exact = small_prob_proportion_exact(GanKind::mim(), pair, part);
      double approx = small_prob_proportion_approx(
          GanKind::mim(), PerturbedBernoulli::from_displacement(p, d));
      if (faulty(r.name)) approx += 1.0;
      const double err = std::abs(approx - exact);
      const double bound = 10.0 * std::pow(std::abs(d), 3) / (p * p);
      r.max_error = std::max(r.max_error, err);
      if (err > bound) ok = false;
    }
    r.passed = ok;
    results.push_back(r);
  }

  {  // (e) gradient interference closed forms vs finite differences
    CheckResult r{"gradient_interference_fd", true, 0.0, 0,
                  "closed forms vs central differences on the linear "
                  "generator construction (mim, original, wgan)"};
    for (const GanKind& k :
         {GanKind::mim(), GanKind::original(), GanKind::wgan()}) {
      for (const double delta : {0.01, 0.05, 0.1, 0.3}) {
        for (const double upsilon : {1e-3, 1e-2}) {
          const AnalyticMeasured am =
              gradient_interference_empirical(k, delta, upsilon, seed);
          const double flip = faulty(r.name) ? -1.0 : 1.0;
          r.max_error = std::max(
              r.max_error,
              std::abs(am.measured - flip * am.analytic) / std::abs(am.analytic));
          ++r.instances;
        }
      }
    }
    r.passed = r.max_error < 1e-4;
    results.push_back(r);
  }

  {  // (f) interference ratio
    CheckResult r{"interference_ratio_above_one", true, 0.0, 1000,
                  "original/mim interference ratio 1/((1-d) e^d) > 1 on (0,1)"};
    Rng rng(mix_seed("check-f", seed));
    bool ok = true;
    for (int i = 0; i < r.instances; ++i) {
      const double delta = rng.uniform(1e-6, 1.0 - 1e-6);
      const double kl = gradient_interference(GanKind::original(), delta, 0.01, 1.0);
      const double mim = gradient_interference(GanKind::mim(), delta, 0.01, 1.0);
      double ratio = kl / mim;
      if (faulty(r.name)) ratio = 1.0 / ratio;
      const double closed = 1.0 / ((1.0 - delta) * std::exp(delta));
      r.max_error = std::max(r.max_error, std::abs(ratio - closed) / closed);
      if (!(ratio > 1.0)) ok = false;
    }
    r.passed = ok && r.max_error < 1e-12;
    results.push_back(r);
  }

  {  // (g) mode-drop penalty signs
    CheckResult r{"mode_drop_penalty_signs", true, 0.0, 0,
                  "mim/lsgan contributions rise with pg; original GAN "
                  "contribution vanishes"};
    bool ok = true;
    for (const double p : {0.05, 0.2, 0.5}) {
      const std::vector<double> mim = mode_drop_penalty(GanKind::mim(), p);
      const std::vector<double> ls = mode_drop_penalty(GanKind::lsgan(), p);
      const std::vector<double> kl = mode_drop_penalty(GanKind::original(), p);
      for (std::size_t i = 1; i < mim.size(); ++i) {
        // grid is descending in pg, so contributions must descend too
        if (!(mim[i] < mim[i - 1])) ok = false;
        if (!(ls[i] < ls[i - 1])) ok = false;
      }
      const double tail = faulty(r.name) ? 1.0 : std::abs(kl.back());
      r.max_error = std::max(r.max_error, tail);
      if (tail > 1e-6) ok = false;
      // restoring a dropped mode pays off far more under mim
      if (!(mim.back() > kl.back())) ok = false;
      r.instances += static_cast<int>(mim.size());
    }
    r.passed = ok;
    results.push_back(r);
  }

  {  // large-event share complements the small-event share
    CheckResult r{"large_prob_complement", true, 0.0, 500,
                  "Y_large + Y_small = 1 for mim; Pg = P case equals 1 - zeta"};
    Rng rng(mix_seed("check-h", seed));
    for (int i = 0; i < r.instances; ++i) {
      const DiscretePair pair = checks_detail::random_pair(rng, 3 + rng.below(6));
      std::vector<int> small;
      for (std::size_t j = 0; j < pair.size(); ++j)
        if (rng.uniform01() < 0.3) small.push_back(static_cast<int>(j));
      const EventPartition part = EventPartition::of(small);
      const double sum = large_prob_proportion_mim(pair, part) +
                         small_prob_proportion_exact(GanKind::mim(), pair, part);
      r.max_error = std::max(r.max_error, std::abs(sum - 1.0));
    }
    const DiscretePair same({0.01, 0.02, 0.5, 0.47}, {0.01, 0.02, 0.5, 0.47});
    double zeta_err = std::abs(
        large_prob_proportion_mim(same, EventPartition::of({0, 1})) - 0.97);
    if (faulty(r.name)) zeta_err += 1e-6;
    r.max_error = std::max(r.max_error, zeta_err);
    r.passed = r.max_error < 1e-12;
    results.push_back(r);
  }

  {  // generator objectives at D* on hand-checkable pairs
    CheckResult r{"generator_objective_identities", true, 0.0, 3,
                  "Bhattacharyya / -KLD / lsgan forms at P = Pg and a hand pair"};
    const DiscretePair same({0.5, 0.5}, {0.5, 0.5});
    double err = std::abs(generator_objective_at_dopt(GanKind::mim(), same) - 1.0);
    err = std::max(err,
                   std::abs(generator_objective_at_dopt(GanKind::lsgan(), same) - 0.25));
    const DiscretePair hand({0.5, 0.5}, {0.75, 0.25});
    const double kl_want = -(0.75 * std::log(1.5) + 0.25 * std::log(0.5));
    err = std::max(err, std::abs(generator_objective_at_dopt(GanKind::original(),
                                                             hand) -
                                 kl_want));
    if (faulty(r.name)) err += 1e-6;
    r.max_error = err;
    r.passed = err < 1e-12;
    results.push_back(r);
  }

  {  // proportions collapse to p when Pg = P
    CheckResult r{"proportion_equal_distributions", true, 0.0, 300,
                  "Y_small = p exactly at Pg = P for mim / original / lsgan"};
    Rng rng(mix_seed("check-trivial", seed));
    const EventPartition part = EventPartition::of({0});
    for (int i = 0; i < r.instances; ++i) {
      const double p = rng.uniform(1e-3, 0.45);
      const DiscretePair pair({p, 1 - p}, {p, 1 - p});
      for (const GanKind& k :
           {GanKind::mim(), GanKind::original(), GanKind::lsgan()}) {
        const double y = small_prob_proportion_exact(k, pair, part);
        const double offset = faulty(r.name) ? 1e-6 : 0.0;
        r.max_error = std::max(r.max_error, std::abs(y - p) + offset);
      }
    }
    r.passed = r.max_error < 1e-12;
    results.push_back(r);
  }

  return results;
}

inline nlohmann::json checks_report(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const CheckResult& r : results) {
    checks.push_back(r.to_json());
    all = all && r.passed;
  }
  return nlohmann::json{{"checks", checks}, {"all_passed", all}};
}

}  // namespace mimgan::theory
