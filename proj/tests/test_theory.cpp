#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mimgan/rng.hpp"
#include "mimgan/theory.hpp"

using namespace mimgan;
using namespace mimgan::theory;

namespace {

constexpr double kTwoSqrtE = 3.2974425414002562937;

DiscretePair random_pair(Rng& rng, std::size_t n, double floor = 1e-3) {
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

}  // namespace

TEST_CASE("DiscretePair validates probability vectors") {
  REQUIRE_THROWS_AS(DiscretePair({0.5, 0.6}, {0.5, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(DiscretePair({-0.1, 1.1}, {0.5, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(DiscretePair({0.5, 0.5}, {1.0}), std::invalid_argument);
}

TEST_CASE("optimal_discriminator closed forms") {
  SECTION("equal distributions give 1/2 for every kind with a closed form") {
    const DiscretePair pair({0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25});
    for (const GanKind& k :
         {GanKind::mim(), GanKind::original(), GanKind::lsgan()}) {
      for (const double v : optimal_discriminator(k, pair))
        REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
  }
  SECTION("mim example with ratio 4") {
    const DiscretePair pair({0.8, 0.2}, {0.2, 0.8});
    const std::vector<double> d = optimal_discriminator(GanKind::mim(), pair);
    REQUIRE_THAT(d[0], Catch::Matchers::WithinAbs(0.5 + 0.5 * std::log(4.0), 1e-12));
    REQUIRE_THAT(d[0], Catch::Matchers::WithinAbs(1.19315, 1e-5));
    REQUIRE_THAT(d[1], Catch::Matchers::WithinAbs(-0.19315, 1e-5));
  }
  SECTION("wgan has no closed form") {
    const DiscretePair pair({0.5, 0.5}, {0.4, 0.6});
    REQUIRE_THROWS_AS(optimal_discriminator(GanKind::wgan(), pair),
                      UnsupportedKindError);
  }
  SECTION("zero-probability ratios are rejected for mim") {
    const DiscretePair pair({1.0, 0.0}, {0.5, 0.5});
    REQUIRE_THROWS_AS(optimal_discriminator(GanKind::mim(), pair),
                      std::invalid_argument);
  }
}

TEST_CASE("pointwise_min_check: numeric minimizer equals the closed form") {
  SECTION("symmetric case") {
    const MinPair m = pointwise_min_check(1.0, 1.0);
    REQUIRE(m.u_closed == 0.5);
    REQUIRE_THAT(m.u_numeric, Catch::Matchers::WithinAbs(0.5, 1e-8));
  }
  SECTION("a = e^2, b = 1") {
    const MinPair m = pointwise_min_check(std::exp(2.0), 1.0);
    REQUIRE_THAT(m.u_closed, Catch::Matchers::WithinAbs(1.5, 1e-15));
    REQUIRE_THAT(m.u_numeric, Catch::Matchers::WithinAbs(1.5, 1e-8));
  }
  SECTION("1000 random coefficient pairs agree below 1e-8") {
    Rng rng(314159);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double a = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const double b = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const MinPair m = pointwise_min_check(a, b);
      worst = std::max(worst, std::abs(m.u_numeric - m.u_closed));
    }
    REQUIRE(worst < 1e-8);
  }
}

TEST_CASE("objective_at_opt_mim values and bound") {
  SECTION("uniform equal pair reaches 2 sqrt(e)") {
    const DiscretePair pair({0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25});
    REQUIRE_THAT(objective_at_opt_mim(pair),
                 Catch::Matchers::WithinAbs(kTwoSqrtE, 1e-12));
    REQUIRE_THAT(objective_at_opt_mim(pair),
                 Catch::Matchers::WithinAbs(3.297442541, 1e-9));
  }
  SECTION("disjoint supports collapse to zero") {
    const DiscretePair pair({1.0, 0.0}, {0.0, 1.0});
    REQUIRE(objective_at_opt_mim(pair) == 0.0);
  }
  SECTION("hand value for the (0.8, 0.2) pair") {
    const DiscretePair pair({0.8, 0.2}, {0.2, 0.8});
    REQUIRE_THAT(objective_at_opt_mim(pair),
                 Catch::Matchers::WithinAbs(kTwoSqrtE * 0.8, 1e-12));
    REQUIRE_THAT(objective_at_opt_mim(pair),
                 Catch::Matchers::WithinAbs(2.637954, 1e-6));
  }
  SECTION("2 sqrt(e) is an upper bound, tight only at P = Pg") {
    Rng rng(271828);
    for (int i = 0; i < 1000; ++i) {
      const DiscretePair pair = random_pair(rng, 2 + rng.below(8));
      const double v = objective_at_opt_mim(pair);
      REQUIRE(v <= kTwoSqrtE + 1e-12);
      double max_gap = 0.0;
      for (std::size_t j = 0; j < pair.size(); ++j)
        max_gap = std::max(max_gap, std::abs(pair.p[j] - pair.pg[j]));
      if (std::abs(v - kTwoSqrtE) < 1e-12) REQUIRE(max_gap < 1e-6);
    }
    // exact equality case
    const DiscretePair same({0.3, 0.7}, {0.3, 0.7});
    REQUIRE_THAT(objective_at_opt_mim(same),
                 Catch::Matchers::WithinAbs(kTwoSqrtE, 1e-12));
  }
}

TEST_CASE("optimal_discriminator(mim) minimizes the per-event objective") {
  Rng rng(161803);
  for (int i = 0; i < 1000; ++i) {
    const DiscretePair pair = random_pair(rng, 2 + rng.below(6));
    const std::vector<double> d = optimal_discriminator(GanKind::mim(), pair);
    for (std::size_t j = 0; j < pair.size(); ++j) {
      const MinPair m = pointwise_min_check(pair.p[j], pair.pg[j]);
      REQUIRE_THAT(d[j], Catch::Matchers::WithinAbs(m.u_numeric, 1e-8));
    }
  }
}

TEST_CASE("renyi_equivalence_check") {
  SECTION("equal distributions: both sides are 2 sqrt(e)") {
    const DiscretePair pair({0.5, 0.5}, {0.5, 0.5});
    const LhsRhs r = renyi_equivalence_check(pair);
    REQUIRE_THAT(r.lhs, Catch::Matchers::WithinAbs(kTwoSqrtE, 1e-14));
    REQUIRE_THAT(r.rhs, Catch::Matchers::WithinAbs(kTwoSqrtE, 1e-14));
  }
  SECTION("hand pair agrees to 1e-12") {
    const DiscretePair pair({0.9, 0.1}, {0.5, 0.5});
    const LhsRhs r = renyi_equivalence_check(pair);
    REQUIRE_THAT(r.lhs, Catch::Matchers::WithinAbs(r.rhs, 1e-12));
  }
  SECTION("1000 random positive pairs agree below 1e-9") {
    Rng rng(57721);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const DiscretePair pair = random_pair(rng, 2 + rng.below(10));
      const LhsRhs r = renyi_equivalence_check(pair);
      worst = std::max(worst, std::abs(r.lhs - r.rhs));
    }
    REQUIRE(worst < 1e-9);
  }
  SECTION("zero entries are rejected") {
    const DiscretePair pair({1.0, 0.0}, {0.5, 0.5});
    REQUIRE_THROWS_AS(renyi_equivalence_check(pair), std::invalid_argument);
  }
}

TEST_CASE("generator_objective_at_dopt") {
  const DiscretePair same({0.5, 0.5}, {0.5, 0.5});
  SECTION("mim at P = Pg is the unit Bhattacharyya coefficient") {
    REQUIRE_THAT(generator_objective_at_dopt(GanKind::mim(), same),
                 Catch::Matchers::WithinAbs(1.0, 1e-15));
  }
  SECTION("lsgan at P = Pg is 1/4") {
    REQUIRE_THAT(generator_objective_at_dopt(GanKind::lsgan(), same),
                 Catch::Matchers::WithinAbs(0.25, 1e-15));
  }
  SECTION("original hand value") {
    const DiscretePair pair({0.5, 0.5}, {0.75, 0.25});
    const double want = -(0.75 * std::log(1.5) + 0.25 * std::log(0.5));
    REQUIRE_THAT(generator_objective_at_dopt(GanKind::original(), pair),
                 Catch::Matchers::WithinAbs(want, 1e-12));
    REQUIRE_THAT(generator_objective_at_dopt(GanKind::original(), pair),
                 Catch::Matchers::WithinAbs(-0.130812, 1e-6));
  }
  SECTION("original signals +inf KLD when Pg > 0 where P = 0") {
    const DiscretePair pair({1.0, 0.0}, {0.5, 0.5});
    REQUIRE_THROWS_AS(generator_objective_at_dopt(GanKind::original(), pair),
                      std::invalid_argument);
  }
}

TEST_CASE("mode_drop_penalty signs") {
  // Grid runs pg = 1e-1 ... 1e-8.
  SECTION("mim contribution shrinks monotonically as the mode is dropped") {
    const std::vector<double> c = mode_drop_penalty(GanKind::mim(), 0.5);
    REQUIRE_THAT(c[3], Catch::Matchers::WithinAbs(std::sqrt(5e-5), 1e-12));
    REQUIRE_THAT(c[3], Catch::Matchers::WithinAbs(7.07e-3, 5e-6));
    REQUIRE_THAT(c[7], Catch::Matchers::WithinAbs(std::sqrt(5e-9), 1e-15));
    for (std::size_t i = 1; i < c.size(); ++i) REQUIRE(c[i] < c[i - 1]);
  }
  SECTION("original GAN contribution vanishes: dropping a mode costs nothing") {
    const std::vector<double> c = mode_drop_penalty(GanKind::original(), 0.5);
    REQUIRE(std::abs(c[7]) < 1e-6);
  }
  SECTION("lsgan contribution vanishes but with positive slope ~ pg") {
    const std::vector<double> c = mode_drop_penalty(GanKind::lsgan(), 0.5);
    for (std::size_t i = 1; i < c.size(); ++i) REQUIRE(c[i] < c[i - 1]);
    // first-order term of p * (p pg / (p+pg)^2) at pg -> 0 is pg
    const double pg = 1e-8;
    REQUIRE_THAT(c[7] / pg, Catch::Matchers::WithinAbs(1.0, 1e-6));
  }
  SECTION("mim penalizes a dropped mode much harder than the original GAN") {
    const std::vector<double> mim = mode_drop_penalty(GanKind::mim(), 0.5);
    const std::vector<double> orig = mode_drop_penalty(GanKind::original(), 0.5);
    for (std::size_t i = 4; i < mim.size(); ++i) REQUIRE(mim[i] > orig[i]);
  }
}

TEST_CASE("gradient_interference closed forms") {
  SECTION("delta = 0 collapses every kind to upsilon * e_grad") {
    for (const GanKind& k : {GanKind::mim(), GanKind::original(),
                             GanKind::lsgan(), GanKind::wgan()})
      REQUIRE_THAT(gradient_interference(k, 0.0, 0.01, 2.0),
                   Catch::Matchers::WithinAbs(0.02, 1e-15));
  }
  SECTION("mim hand value at delta = 0.1") {
    REQUIRE_THAT(gradient_interference(GanKind::mim(), 0.1, 0.01, 1.0),
                 Catch::Matchers::WithinAbs(0.0110517, 1e-7));
  }
  SECTION("original / mim ratio at delta = 0.5 exceeds one") {
    const double kl = gradient_interference(GanKind::original(), 0.5, 0.01, 1.0);
    const double mim = gradient_interference(GanKind::mim(), 0.5, 0.01, 1.0);
    REQUIRE_THAT(kl / mim, Catch::Matchers::WithinAbs(1.21306, 1e-5));
    REQUIRE(kl / mim > 1.0);
  }
  SECTION("the ratio 1/((1-delta) e^delta) exceeds one on all of (0,1)") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
      const double delta = rng.uniform(1e-6, 1.0 - 1e-6);
      const double ratio = 1.0 / ((1.0 - delta) * std::exp(delta));
      REQUIRE(ratio > 1.0);
      const double kl = gradient_interference(GanKind::original(), delta, 0.01, 1.0);
      const double mim = gradient_interference(GanKind::mim(), delta, 0.01, 1.0);
      REQUIRE_THAT(kl / mim, Catch::Matchers::WithinRel(ratio, 1e-12));
    }
  }
  SECTION("delta at or beyond 1 is rejected") {
    REQUIRE_THROWS_AS(gradient_interference(GanKind::mim(), 1.0, 0.01, 1.0),
                      std::invalid_argument);
  }
}

TEST_CASE("gradient_interference_empirical agrees with the closed forms") {
  SECTION("sweep over delta and upsilon for the exactly-derivable kinds") {
    for (const GanKind& k :
         {GanKind::mim(), GanKind::original(), GanKind::wgan()}) {
      for (const double delta : {0.01, 0.05, 0.1, 0.3}) {
        for (const double upsilon : {1e-3, 1e-2}) {
          const AnalyticMeasured r =
              gradient_interference_empirical(k, delta, upsilon, 99);
          REQUIRE(std::abs(r.measured - r.analytic) / std::abs(r.analytic) <
                  1e-4);
        }
      }
    }
  }
  SECTION("upsilon = 0 gives zero on both sides") {
    const AnalyticMeasured r =
        gradient_interference_empirical(GanKind::mim(), 0.05, 0.0, 7);
    REQUIRE(std::abs(r.analytic) < 1e-12);
    REQUIRE(std::abs(r.measured) < 1e-9);
  }
  SECTION("lsgan is excluded: its table form has no exact closed form") {
    REQUIRE_THROWS_AS(
        gradient_interference_empirical(GanKind::lsgan(), 0.05, 0.01, 1),
        UnsupportedKindError);
  }
}

TEST_CASE("small_prob_proportion_exact") {
  SECTION("P = Pg Bernoulli gives exactly p for mim and the original GAN") {
    for (const double p : {0.01, 0.05, 0.2}) {
      const DiscretePair pair({p, 1 - p}, {p, 1 - p});
      const EventPartition part = EventPartition::of({0});
      REQUIRE_THAT(small_prob_proportion_exact(GanKind::mim(), pair, part),
                   Catch::Matchers::WithinAbs(p, 1e-15));
      REQUIRE_THAT(small_prob_proportion_exact(GanKind::original(), pair, part),
                   Catch::Matchers::WithinAbs(p, 1e-12));
      REQUIRE_THAT(small_prob_proportion_exact(GanKind::lsgan(), pair, part),
                   Catch::Matchers::WithinAbs(p, 1e-12));
    }
  }
  SECTION("mim hand value at p = 0.01, q = 0.012") {
    const DiscretePair pair({0.01, 0.99}, {0.012, 0.988});
    const EventPartition part = EventPartition::of({0});
    const double want =
        std::sqrt(0.00012) / (std::sqrt(0.00012) + std::sqrt(0.99 * 0.988));
    REQUIRE_THAT(small_prob_proportion_exact(GanKind::mim(), pair, part),
                 Catch::Matchers::WithinAbs(want, 1e-15));
    REQUIRE_THAT(small_prob_proportion_exact(GanKind::mim(), pair, part),
                 Catch::Matchers::WithinAbs(0.010955, 1e-6));
  }
  SECTION("wgan proportion is undetermined") {
    const DiscretePair pair({0.1, 0.9}, {0.2, 0.8});
    REQUIRE_THROWS_AS(small_prob_proportion_exact(GanKind::wgan(), pair,
                                                  EventPartition::of({0})),
                      UnsupportedKindError);
  }
}

TEST_CASE("small_prob_proportion_approx") {
  SECTION("epsilon = 0 degenerates to p for all three kinds") {
    const PerturbedBernoulli bern(0.03, 0.0, 1.0, 0.0);
    for (const GanKind& k :
         {GanKind::mim(), GanKind::original(), GanKind::lsgan()})
      REQUIRE_THAT(small_prob_proportion_approx(k, bern),
                   Catch::Matchers::WithinAbs(0.03, 1e-15));
  }
  SECTION("mim approximation near the exact value at p=0.01, d=0.002") {
    const PerturbedBernoulli bern = PerturbedBernoulli::from_displacement(0.01, 0.002);
    REQUIRE_THAT(bern.q(), Catch::Matchers::WithinAbs(0.012, 1e-15));
    REQUIRE_THAT(bern.second_order_mass(), Catch::Matchers::WithinAbs(4e-4, 1e-15));
    const double approx = small_prob_proportion_approx(GanKind::mim(), bern);
    REQUIRE_THAT(approx, Catch::Matchers::WithinAbs(0.0109505, 1e-6));
    const DiscretePair pair({0.01, 0.99}, {0.012, 0.988});
    const double exact = small_prob_proportion_exact(GanKind::mim(), pair,
                                                     EventPartition::of({0}));
    REQUIRE(std::abs(approx - exact) < 1e-4);
  }
  SECTION("small-probability dominance on exact proportions, 1000 instances") {
    // |d| >= 0.01 p keeps the strict inequality clear of rounding noise;
    // equality itself is checked at d = 0.
    Rng rng(123457);
    const EventPartition part = EventPartition::of({0});
    for (int i = 0; i < 1000; ++i) {
      const double p = rng.uniform(1e-3, 0.1);
      double d = rng.uniform(0.01, 0.2) * p;
      if (rng.uniform01() < 0.5) d = -d;
      const double q = p + d;
      const DiscretePair pair({p, 1 - p}, {q, 1 - q});
      const double mim = small_prob_proportion_exact(GanKind::mim(), pair, part);
      const double kl =
          small_prob_proportion_exact(GanKind::original(), pair, part);
      const double ls = small_prob_proportion_exact(GanKind::lsgan(), pair, part);
      REQUIRE(mim > kl);
      REQUIRE(mim > ls);
    }
    for (const double p : {0.001, 0.02, 0.1}) {
      const DiscretePair pair({p, 1 - p}, {p, 1 - p});
      const double mim = small_prob_proportion_exact(GanKind::mim(), pair, part);
      const double kl =
          small_prob_proportion_exact(GanKind::original(), pair, part);
      const double ls = small_prob_proportion_exact(GanKind::lsgan(), pair, part);
      REQUIRE_THAT(mim, Catch::Matchers::WithinAbs(kl, 1e-12));
      REQUIRE_THAT(mim, Catch::Matchers::WithinAbs(ls, 1e-12));
    }
  }
  SECTION("approximation error obeys the cubic bound 10 |d|^3 / p^2") {
    Rng rng(88);
    const EventPartition part = EventPartition::of({0});
    for (int i = 0; i < 1000; ++i) {
      const double p = rng.uniform(1e-3, 0.1);
      double d = rng.uniform(0.01, 0.2) * p;
      if (rng.uniform01() < 0.5) d = -d;
      const DiscretePair pair({p, 1 - p}, {p + d, 1 - p - d});
      const double exact = small_prob_proportion_exact(GanKind::mim(), pair, part);
      const double approx = small_prob_proportion_approx(
          GanKind::mim(), PerturbedBernoulli::from_displacement(p, d));
      REQUIRE(std::abs(approx - exact) <= 10.0 * std::pow(std::abs(d), 3) / (p * p));
    }
  }
  SECTION("invalid Bernoulli parameters are rejected") {
    REQUIRE_THROWS_AS(PerturbedBernoulli(0.6, 0.0, 1.0, 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(PerturbedBernoulli::from_displacement(0.4, 0.2),
                      std::invalid_argument);
  }
}

TEST_CASE("large_prob_proportion_mim") {
  SECTION("Pg = P with small mass 0.03 gives 0.97 exactly") {
    const DiscretePair pair({0.01, 0.02, 0.5, 0.47}, {0.01, 0.02, 0.5, 0.47});
    const EventPartition part = EventPartition::of({0, 1});
    REQUIRE_THAT(large_prob_proportion_mim(pair, part),
                 Catch::Matchers::WithinAbs(0.97, 1e-12));
  }
  SECTION("empty small set gives 1") {
    const DiscretePair pair({0.3, 0.7}, {0.4, 0.6});
    REQUIRE(large_prob_proportion_mim(pair, EventPartition::of({})) == 1.0);
  }
  SECTION("complements small_prob_proportion_exact within 1e-12") {
    Rng rng(5150);
    for (int i = 0; i < 200; ++i) {
      const DiscretePair pair = random_pair(rng, 3 + rng.below(6));
      std::vector<int> small;
      for (std::size_t j = 0; j < pair.size(); ++j)
        if (rng.uniform01() < 0.3) small.push_back(static_cast<int>(j));
      const EventPartition part = EventPartition::of(small);
      const double large = large_prob_proportion_mim(pair, part);
      const double smallp =
          small_prob_proportion_exact(GanKind::mim(), pair, part);
      REQUIRE_THAT(large + smallp, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
}
