// Tail-bound machinery: pmf builders, convolution bookkeeping, and the
// safety-violation bound cross-checked against direct simulation.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "powlab/consistency.hpp"
#include "powlab/pmf.hpp"
#include "powlab/rng.hpp"

using namespace powlab;
using Catch::Matchers::WithinAbs;

namespace {

// Samplers matching the pmf builders law-for-law, used to validate the
// convolution pipeline end to end.
int sample_geometric_lead(RngStream& rng, double success_p) {
  const double r = (1.0 - success_p) / success_p;
  int k = 0;
  while (rng.next_uniform() < r) ++k;
  return k;
}

int sample_negbin(RngStream& rng, int count, double success_p) {
  int failures = 0, successes = 0;
  while (successes < count) {
    if (rng.next_uniform() < success_p) {
      ++successes;
    } else {
      ++failures;
    }
  }
  return failures;
}

int sample_poisson(RngStream& rng, double mean) {
  const double limit = std::exp(-mean);
  int k = -1;
  double prod = 1.0;
  do {
    ++k;
    prod *= rng.next_uniform();
  } while (prod > limit);
  return k;
}

}  // namespace

TEST_CASE("pmf builders are normalized with explicit truncation", "[pmf]") {
  for (const Pmf& pmf : {geometric_lead_pmf(0.7), negbin_pmf(50, 0.75),
                         poisson_sum_pmf(50, 50.0 / 600.0), poisson_sum_pmf(2, 10.0 * 50.0 / 600.0)}) {
    CHECK_THAT(pmf.total() + pmf.truncation_mass, WithinAbs(1.0, 1e-12));
    CHECK(pmf.truncation_mass >= 0.0);
    CHECK(pmf.truncation_mass < 1e-11);
  }
  SECTION("zero-rate window is the point mass at zero") {
    const Pmf z = poisson_sum_pmf(0, 0.5);
    REQUIRE(z.p.size() == 1);
    CHECK(z.p[0] == 1.0);
  }
  SECTION("parameter validation") {
    CHECK_THROWS_AS(geometric_lead_pmf(0.5), std::domain_error);
    CHECK_THROWS_AS(negbin_pmf(0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(poisson_sum_pmf(1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(geometric_lead_pmf(0.7, 0.0), std::invalid_argument);
  }
}

TEST_CASE("two geometric leads convolve to a second-order pascal law", "[pmf]") {
  const double p = 0.75;
  const double r = (1.0 - p) / p;
  const Pmf one = geometric_lead_pmf(p);
  const Pmf sum = convolve(one, one);
  // Number of failures before the 2nd success at success rate 1-r.
  const Pmf pascal = negbin_pmf(2, 1.0 - r);
  const std::size_t n = std::min(sum.p.size(), pascal.p.size());
  REQUIRE(n > 20);
  for (std::size_t k = 0; k < n; ++k) {
    CHECK_THAT(sum.p[k], WithinAbs(pascal.p[k], 1e-12));
  }
  CHECK_THAT(sum.total() + sum.truncation_mass, WithinAbs(1.0, 1e-12));
}

TEST_CASE("independent windows add their rates", "[pmf]") {
  const double rate = 50.0 / 600.0;
  const Pmf direct = poisson_sum_pmf(2, rate);
  const Pmf composed = convolve(poisson_sum_pmf(1, rate), poisson_sum_pmf(1, rate));
  const std::size_t n = std::min(direct.p.size(), composed.p.size());
  for (std::size_t k = 0; k < n; ++k) {
    CHECK_THAT(composed.p[k], WithinAbs(direct.p[k], 1e-12));
  }
}

TEST_CASE("convolution keeps every unit of truncated mass", "[pmf]") {
  Pmf a = geometric_lead_pmf(0.6, 1e-6);
  Pmf b = negbin_pmf(10, 0.6, 1e-6);
  const Pmf c = convolve(a, b);
  const double expect = a.truncation_mass + b.truncation_mass -
                        a.truncation_mass * b.truncation_mass;
  CHECK_THAT(c.truncation_mass, WithinAbs(expect, 1e-18));
  CHECK_THAT(c.total() + c.truncation_mass, WithinAbs(1.0, 1e-9));
  CHECK_THROWS_AS(convolve(Pmf{}, a), std::invalid_argument);
}

TEST_CASE("safety bound at the reference operating point", "[consistency]") {
  ConsistencyParams params;  // L=50, beta=0.75, 10-minute clusters
  const SafetyBound b = safety_violation_bound(params);
  CHECK(b.regime_ok);
  CHECK_THAT(b.p, WithinAbs(0.75 * std::exp(-50.0 / 600.0), 1e-12));
  CHECK(b.value > 0.0);
  CHECK(b.value < 1e-3);
  CHECK(b.upper == b.value + b.truncation);
  CHECK(b.truncation < 1e-10);
}

TEST_CASE("insecure parameters are rejected, not silently bounded", "[consistency]") {
  ConsistencyParams params;
  params.delta = 600.0;  // proofs slower than the cluster cadence: p << 1/2
  CHECK_THROWS_AS(safety_violation_bound(params), std::domain_error);
  params.delta = -1.0;
  CHECK_THROWS_AS(safety_violation_bound(params), std::invalid_argument);
}

TEST_CASE("bound shrinks as clusters grow", "[consistency]") {
  ConsistencyParams params;
  const auto curve = consistency_curve(params, 10, 100, 10);
  REQUIRE(curve.size() == 10);
  double prev = 1.0;
  for (const CurvePoint& pt : curve) {
    REQUIRE(pt.regime_ok);
    REQUIRE(pt.bound.has_value());
    CHECK(*pt.bound <= prev + 1e-15);
    prev = *pt.bound;
  }
  CHECK_THROWS_AS(consistency_curve(params, 10, 5), std::invalid_argument);
}

TEST_CASE("analytic tail agrees with direct simulation", "[consistency][slow]") {
  for (int L : {10, 20, 50}) {
    ConsistencyParams params;
    params.L = L;
    const SafetyBound bound = safety_violation_bound(params);
    const double p = bound.p;
    const double proof_window_mean = L * params.lambda_proof() * params.delta;
    const double cluster_window_mean = 2 * params.lambda_proof() * params.big_delta;

    const int n = 1000000;
    RngStream rng(314159, static_cast<std::uint64_t>(L));
    long long hits = 0;
    for (int i = 0; i < n; ++i) {
      long long sum = sample_geometric_lead(rng, p);
      sum += sample_negbin(rng, L, params.beta);
      sum += sample_poisson(rng, proof_window_mean);
      sum += sample_poisson(rng, cluster_window_mean);
      sum += sample_geometric_lead(rng, p);
      if (sum >= L) ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double sigma = std::sqrt(bound.value * (1.0 - bound.value) / n);
    INFO("L=" << L << " analytic=" << bound.value << " mc=" << mc << " sigma=" << sigma);
    CHECK_THAT(mc, WithinAbs(bound.value, 3.0 * sigma + bound.truncation + 1e-12));
  }
}
