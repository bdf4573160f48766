// Closed-form model checks: fixed points, waste expectations, fee thresholds.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "powlab/analytic.hpp"
#include "powlab/rng.hpp"

using namespace powlab;
using Catch::Matchers::WithinAbs;

TEST_CASE("withholding limit closed form", "[analytic]") {
  CHECK_THAT(withhold_limit(0.25, 100), WithinAbs(0.33, 1e-12));
  CHECK_THAT(withhold_limit(0.30, 50), WithinAbs(0.42, 1e-12));
  CHECK(withhold_limit(0.0, 10) == 0.0);
  // Large L approaches the single-chain ceiling from below.
  CHECK(withhold_limit(0.3, 100000) < selfish_upper_bound(0.3));
  CHECK_THAT(withhold_limit(0.3, 100000), WithinAbs(selfish_upper_bound(0.3), 1e-4));
  CHECK_THROWS_AS(withhold_limit(0.5, 50), std::invalid_argument);
  CHECK_THROWS_AS(withhold_limit(0.2, 0), std::invalid_argument);
}

TEST_CASE("per-cluster recursion converges to the limit", "[analytic]") {
  const auto steps = withhold_recursion(0.3, 50, 200);
  REQUIRE(steps.size() == 200);
  CHECK_THAT(steps.front().a, WithinAbs(0.3, 1e-12));  // first cluster: no advantage yet
  CHECK(steps.front().b == 0.0);
  CHECK_THAT(steps.back().a, WithinAbs(withhold_limit(0.3, 50), 1e-10));
  // Monotone approach from below: each cluster the carried advantage grows.
  for (std::size_t i = 1; i < steps.size(); ++i) {
    CHECK(steps[i].a >= steps[i - 1].a - 1e-15);
    CHECK(steps[i].b >= steps[i - 1].b - 1e-15);
  }
}

TEST_CASE("visibility-weighted rewards cross the proof-count share", "[analytic]") {
  // With every proof referencing all it has seen, hidden proofs impoverish
  // the adversary at low power but the larger referenced sets dominate once
  // the recursion fixed point is high enough.
  for (double alpha : {0.10, 0.20, 0.30}) {
    const auto d = dag_expected_rewards(alpha, 50);
    CHECK(d.rho < withhold_limit(alpha, 50));
  }
  for (double alpha : {0.35, 0.40, 0.45}) {
    const auto d = dag_expected_rewards(alpha, 50);
    CHECK(d.rho > withhold_limit(alpha, 50));
  }
  const auto d = dag_expected_rewards(0.45, 50);
  CHECK_THAT(d.a_fixed, WithinAbs(withhold_limit(0.45, 50), 1e-10));
  CHECK_THAT(d.rho, WithinAbs(0.9178856559, 1e-9));
}

TEST_CASE("expected honest waste per stalled cluster", "[analytic]") {
  const auto hw = h_waste_truncated(10, 2);
  CHECK_THAT(hw.expected, WithinAbs(8.16390450794, 1e-9));
  CHECK(hw.exceeds_two_thirds);
  CHECK_THAT(h_waste_truncated(50, 25).expected, WithinAbs(46.1159365288, 1e-8));

  SECTION("Monte Carlo agreement") {
    // The race mines fresh proofs until one beats the minimum of L uniforms
    // or L+N proofs have been burned; simulate exactly that.
    const int L = 10, N = 2, trials = 200000;
    RngStream rng(7, 0);
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      double m = 1.0;
      for (int i = 0; i < L; ++i) m = std::min(m, rng.next_uniform());
      int burned = 0;
      while (burned < L + N) {
        ++burned;
        if (rng.next_uniform() < m) break;
      }
      total += burned;
    }
    const double mc = total / trials;
    // sd of one trial is < 4; 5 sigma at 200k trials is well under 0.05.
    CHECK_THAT(mc, WithinAbs(hw.expected, 0.05));
  }

  SECTION("waste exceeds two thirds of the cluster across the power grid") {
    for (int L : {10, 20, 50, 100}) {
      for (double alpha = 0.05; alpha < 0.5; alpha += 0.05) {
        const int N = std::max(0, static_cast<int>(std::ceil(L * alpha)) - 1);
        const auto r = h_waste_truncated(L, N);
        INFO("L=" << L << " N=" << N);
        CHECK(r.expected > 2.0 * L / 3.0);
        CHECK(r.exceeds_two_thirds);
      }
    }
  }
}

TEST_CASE("fee-split deviation threshold", "[analytic]") {
  const double r_eq = equal_split_r(50);
  CHECK_THAT(r_eq, WithinAbs(1.0 / 51.0, 1e-15));
  CHECK_THAT(fee_split_threshold(0.1, 50, r_eq), WithinAbs(0.855072463768, 1e-9));
  // Increasing in alpha: bigger miners need a closer substitute ledger.
  double prev = -1.0;
  for (double a = 0.0; a <= 0.5 + 1e-12; a += 0.05) {
    const double t = fee_split_threshold(a, 50, r_eq);
    CHECK(t > prev);
    prev = t;
  }
  CHECK_THROWS_AS(fee_split_threshold(-0.1, 50, r_eq), std::invalid_argument);
  CHECK_THROWS_AS(fee_split_threshold(0.1, 50, 1.5), std::invalid_argument);
}

TEST_CASE("largest power that profits from a fee ratio", "[analytic]") {
  const auto b = fee_split_alpha_bound(0.85, 50, 1.0 / 100.0);
  CHECK_FALSE(b.always_profitable);
  CHECK_FALSE(b.never_profitable);
  CHECK_THAT(b.alpha, WithinAbs(0.0379990381, 2e-6));
  // Consistency with the forward threshold at the returned boundary.
  CHECK_THAT(fee_split_threshold(b.alpha, 50, 1.0 / 100.0), WithinAbs(0.85, 1e-6));

  SECTION("boundary reporting") {
    CHECK(fee_split_alpha_bound(1.0, 50, 0.01).always_profitable);
    CHECK(fee_split_alpha_bound(1.2, 50, 0.01).always_profitable);
    const double lo = fee_split_threshold(0.0, 50, 0.01);
    CHECK(fee_split_alpha_bound(lo * 0.5, 50, 0.01).never_profitable);
    const double hi = fee_split_threshold(0.5, 50, 0.01);
    const auto capped = fee_split_alpha_bound(hi + 1e-6, 50, 0.01);
    CHECK(capped.alpha == 0.5);
    CHECK_FALSE(capped.always_profitable);
  }
}

TEST_CASE("single-chain ceiling and strategy mix", "[analytic]") {
  CHECK_THAT(selfish_upper_bound(1.0 / 3.0), WithinAbs(0.5, 1e-12));
  CHECK(selfish_upper_bound(0.0) == 0.0);
  CHECK_THROWS_AS(selfish_upper_bound(1.0), std::invalid_argument);
  CHECK_THAT(mdp_weighted_mix(0.4, 0.2, 10), WithinAbs(0.22, 1e-12));
  CHECK_THAT(mdp_weighted_mix(0.4, 0.2, 1), WithinAbs(0.4, 1e-12));  // one slot: pure race
  CHECK_THROWS_AS(mdp_weighted_mix(1.2, 0.2, 10), std::invalid_argument);
}

TEST_CASE("relative reward bookkeeping", "[analytic]") {
  const auto m = relative_metrics(30.0, 70.0, 50.0, 0.25);
  REQUIRE(m.rho.has_value());
  CHECK_THAT(*m.rho, WithinAbs(0.3, 1e-12));
  CHECK_THAT(m.mu, WithinAbs(0.6, 1e-12));
  CHECK_THAT(m.nu, WithinAbs(1.4, 1e-12));
  CHECK_THAT(*m.per_power_adv, WithinAbs(1.2, 1e-12));
  CHECK_THAT(*m.per_power_honest, WithinAbs(0.7 / 0.75, 1e-12));

  const auto empty = relative_metrics(0.0, 0.0, 1.0, 0.25);
  CHECK_FALSE(empty.rho.has_value());
  CHECK(empty.mu == 0.0);
  CHECK_THROWS_AS(relative_metrics(1.0, 1.0, 0.0, 0.25), std::invalid_argument);
}
