#pragma once

// Upper bound on the probability that two honest parties settle on
// conflicting clusters: the adversary wins a race whose score is the sum of
// its pre-mined lead, the proofs it mines while the honest cluster
// completes, everything produced inside two network-delay windows, and a
// second independent lead it may still be holding. The bound is the exact
// tail P(sum >= L) of that five-way convolution, with truncation error
// carried along explicitly.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "powlab/pmf.hpp"

namespace powlab {

struct ConsistencyParams {
  int L = 50;                   // proofs per cluster
  double beta = 0.75;           // honest share of total mining power
  double lambda_block = 1.0 / 600.0;  // cluster arrival rate, 1/s
  double delta = 1.0;           // proof propagation delay bound, s
  double big_delta = 10.0;      // cluster propagation delay bound, s
  double epsilon = 1e-12;       // per-distribution truncation budget

  double lambda_proof() const { return static_cast<double>(L) * lambda_block; }

  // Probability that the next effective arrival is an honest proof that
  // every honest miner sees in time. The race analysis requires p > 1/2.
  double race_p() const { return beta * std::exp(-lambda_proof() * delta); }

  void validate() const {
    if (L < 1) throw std::invalid_argument("consistency: L must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0)) {
      throw std::invalid_argument("consistency: beta must be in (0, 1]");
    }
    if (!(lambda_block > 0.0)) {
      throw std::invalid_argument("consistency: lambda_block must be positive");
    }
    if (delta < 0.0 || big_delta < 0.0) {
      throw std::invalid_argument("consistency: delays must be non-negative");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw std::invalid_argument("consistency: epsilon must be in (0, 1)");
    }
  }
};

struct SafetyBound {
  double value;       // known mass at sum >= L (lower end of the interval)
  double upper;       // value + accumulated truncation mass
  double truncation;  // total truncated probability across the convolution
  double p;           // race success probability used
  bool regime_ok;     // p > 1/2
};

// Exact tail bound for the given parameters. Throws std::domain_error when
// the parameters leave the analysable regime (p <= 1/2): no finite bound
// exists there and callers must treat the configuration as insecure.
inline SafetyBound safety_violation_bound(const ConsistencyParams& params) {
  params.validate();
  const double p = params.race_p();
  if (!(p > 0.5)) {
    throw std::domain_error(
        "safety_violation_bound: race probability <= 1/2; parameters are outside the secure regime");
  }
  const Pmf lead = geometric_lead_pmf(p, params.epsilon);
  const Pmf completion = negbin_pmf(params.L, params.beta, params.epsilon);
  const Pmf proof_window =
      poisson_sum_pmf(params.L, params.lambda_proof() * params.delta, params.epsilon);
  const Pmf cluster_window = poisson_sum_pmf(2, params.lambda_proof() * params.big_delta,
                                             params.epsilon);

  Pmf sum = convolve(lead, completion);
  sum = convolve(sum, proof_window);
  sum = convolve(sum, cluster_window);
  sum = convolve(sum, lead);  // deficit lead: independent, same law

  SafetyBound out;
  out.value = sum.tail_at_least(static_cast<std::size_t>(params.L));
  out.truncation = sum.truncation_mass;
  out.upper = out.value + out.truncation;
  out.p = p;
  out.regime_ok = true;
  return out;
}

struct CurvePoint {
  int L;
  std::optional<double> bound;  // empty when the point is outside the regime
  double truncation;
  double p;
  bool regime_ok;
};

// Bound as a function of cluster size with the proof rate scaled as
// lambda_proof = L * lambda_block (fixed cluster arrival rate).
inline std::vector<CurvePoint> consistency_curve(ConsistencyParams params, int L_lo, int L_hi,
                                                 int L_step = 1) {
  if (L_lo < 1 || L_hi < L_lo || L_step < 1) {
    throw std::invalid_argument("consistency_curve: bad L range");
  }
  std::vector<CurvePoint> out;
  for (int L = L_lo; L <= L_hi; L += L_step) {
    params.L = L;
    params.validate();
    CurvePoint pt;
    pt.L = L;
    pt.p = params.race_p();
    pt.regime_ok = pt.p > 0.5;
    pt.truncation = 0.0;
    if (pt.regime_ok) {
      const SafetyBound b = safety_violation_bound(params);
      pt.bound = b.value;
      pt.truncation = b.truncation;
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace powlab
