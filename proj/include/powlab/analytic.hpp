#pragma once

// Closed-form models for withholding attacks, honest-work waste, fee-split
// deviation incentives, and reward-ratio bookkeeping.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace powlab {

namespace detail {

inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace detail

// Long-run fraction of cluster proofs an adversary captures with the
// withholding strategy, in the limit of many blocks.
inline double withhold_limit(double alpha, int L) {
  detail::require(alpha >= 0.0 && alpha < 0.5, "withhold_limit: alpha must be in [0, 0.5)");
  detail::require(L >= 1, "withhold_limit: L must be >= 1");
  return alpha / (1.0 - alpha) * (static_cast<double>(L - 1) / L);
}

struct WithholdStep {
  double a;  // expected adversarial fraction of the n-th settled cluster
  double b;  // expected carried-advantage fraction entering the n-th cluster
};

// Expected per-cluster recursion for the withholding attack. b_1 = 0 and
// a_1 = alpha; thereafter b_n = alpha/(1-alpha) * (a_{n-1} - 1/L) and
// a_n = alpha * (1 + a_{n-1}) - alpha/L. Values are clamped to [0, 1].
inline std::vector<WithholdStep> withhold_recursion(double alpha, int L, int n_blocks) {
  detail::require(alpha >= 0.0 && alpha < 0.5, "withhold_recursion: alpha must be in [0, 0.5)");
  detail::require(L >= 1, "withhold_recursion: L must be >= 1");
  detail::require(n_blocks >= 1, "withhold_recursion: n_blocks must be >= 1");
  auto clamp01 = [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); };
  std::vector<WithholdStep> out;
  out.reserve(static_cast<std::size_t>(n_blocks));
  double a = alpha, b = 0.0;
  out.push_back({clamp01(a), b});
  for (int n = 2; n <= n_blocks; ++n) {
    b = clamp01(alpha / (1.0 - alpha) * (a - 1.0 / L));
    a = clamp01(alpha * (1.0 + a) - alpha / L);
    out.push_back({a, b});
  }
  return out;
}

struct DagRewardSummary {
  double adversary_expected;  // E[per-cluster adversarial reward units]
  double honest_expected;     // E[per-cluster honest reward units]
  double rho;                 // adversary_expected / (adversary + honest)
  double a_fixed;             // fixed-point adversarial proof fraction
  double b_fixed;             // fixed-point carried-advantage fraction
};

// Expected visibility-weighted rewards of a settled cluster under the
// withholding attack when every proof references everything its miner has
// seen, evaluated at the fixed point of the recursion above. The released
// advantage proof earns the full cluster size; hidden advantage proofs see
// adversarial proofs only; late adversarial proofs add the honest proofs
// that arrived before them; honest proofs see one another, the released
// proof, and the late adversarial proofs mined after them.
inline DagRewardSummary dag_expected_rewards(double alpha, int L) {
  detail::require(alpha >= 0.0 && alpha < 0.5, "dag_expected_rewards: alpha must be in [0, 0.5)");
  detail::require(L >= 1, "dag_expected_rewards: L must be >= 1");
  // Iterate to the fixed point; contraction factor is alpha < 1/2, so a few
  // hundred steps reach double precision.
  double a = alpha, b = 0.0;
  for (int n = 0; n < 512; ++n) {
    b = alpha / (1.0 - alpha) * (a - 1.0 / L);
    if (b < 0.0) b = 0.0;
    a = alpha * (1.0 + a) - alpha / L;
    if (a < 0.0) a = 0.0;
    if (a > 1.0) a = 1.0;
  }
  const double Ld = static_cast<double>(L);
  const double adv = Ld + (Ld * b - 1.0) * (Ld * a) + Ld * (a - b) * (Ld * (1.0 + a) / 2.0);
  const double hon = Ld * (1.0 - a) * (1.0 + Ld * (1.0 - (a + b) / 2.0));
  DagRewardSummary s;
  s.adversary_expected = adv;
  s.honest_expected = hon;
  s.rho = (adv + hon > 0.0) ? adv / (adv + hon) : 0.0;
  s.a_fixed = a;
  s.b_fixed = b;
  return s;
}

struct HWasteResult {
  double expected;            // expected honest proofs burned per stalled cluster
  bool exceeds_two_thirds;    // expected > 2L/3
};

// Expected number of honest proofs wasted while racing a withheld
// lowest-hash proof: the race ends at the first fresh proof that beats the
// minimum of L uniforms, truncated at L+N fresh proofs (N = proofs still
// hidden for the stalled cluster). Summed with Kahan compensation because
// the series has L+N-1 same-sign terms and feeds threshold comparisons.
inline HWasteResult h_waste_truncated(int L, int N) {
  detail::require(L >= 1, "h_waste_truncated: L must be >= 1");
  detail::require(N >= 0, "h_waste_truncated: N must be >= 0");
  double sum = 0.0, comp = 0.0;
  for (int k = 1; k <= L + N - 1; ++k) {
    const double term =
        static_cast<double>(L) * k / (static_cast<double>(L + k) * (static_cast<double>(L + k) - 1.0));
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double tail = static_cast<double>(L) * (L + N) / (2.0 * L + N - 1.0);
  const double y = tail - comp;
  const double expected = sum + y;
  return {expected, expected > 2.0 * L / 3.0};
}

// Minimum fee ratio (own ledger fees / best shared ledger fees) at which a
// miner of relative power alpha profits from electing its own ledger.
// Increasing in alpha: large miners need a closer substitute before
// deviating pays.
inline double fee_split_threshold(double alpha, int L, double r) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, "fee_split_threshold: alpha must be in [0, 1]");
  detail::require(L >= 1, "fee_split_threshold: L must be >= 1");
  detail::require(r >= 0.0 && r <= 1.0, "fee_split_threshold: r must be in [0, 1]");
  const double voter_share = (1.0 - r) / L * (1.0 + (L - 1) * alpha);
  return 1.0 - r / (r + voter_share);
}

// Convenience: the leader share that splits fees evenly across the leader
// and the L voters of a fully sequential cluster.
inline double equal_split_r(int L) {
  detail::require(L >= 1, "equal_split_r: L must be >= 1");
  return 1.0 / (L + 1.0);
}

struct FeeAlphaBound {
  double alpha;            // largest power for which deviation is profitable
  bool always_profitable;  // fee_ratio >= 1: own ledger never worse
  bool never_profitable;   // fee_ratio below the alpha=0 threshold
};

// Inverts fee_split_threshold: deviation at a given fee ratio is profitable
// exactly for alpha in [0, bound]. Solved by bisection since the threshold
// is monotone in alpha; boundary cases are reported explicitly.
inline FeeAlphaBound fee_split_alpha_bound(double fee_ratio, int L, double r) {
  detail::require(fee_ratio >= 0.0, "fee_split_alpha_bound: fee_ratio must be >= 0");
  detail::require(L >= 1, "fee_split_alpha_bound: L must be >= 1");
  detail::require(r >= 0.0 && r <= 1.0, "fee_split_alpha_bound: r must be in [0, 1]");
  if (fee_ratio >= 1.0) return {0.0, true, false};
  const double lo_thresh = fee_split_threshold(0.0, L, r);
  const double hi_thresh = fee_split_threshold(0.5, L, r);
  if (fee_ratio < lo_thresh) return {0.0, false, true};
  if (fee_ratio >= hi_thresh) return {0.5, false, false};
  double lo = 0.0, hi = 0.5;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (fee_split_threshold(mid, L, r) <= fee_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), false, false};
}

// Classic single-chain selfish-mining ceiling on the relative reward.
inline double selfish_upper_bound(double alpha) {
  detail::require(alpha >= 0.0 && alpha < 1.0, "selfish_upper_bound: alpha must be in [0, 1)");
  return alpha / (1.0 - alpha);
}

struct RelativeMetrics {
  std::optional<double> rho;               // adv / (adv + honest)
  double mu;                               // adv reward per unit of chain progress
  double nu;                               // honest reward per unit of chain progress
  std::optional<double> per_power_adv;     // rho / alpha
  std::optional<double> per_power_honest;  // (1 - rho) / (1 - alpha)
};

inline RelativeMetrics relative_metrics(double adversary_reward, double honest_reward,
                                        double progress, double alpha) {
  detail::require(adversary_reward >= 0.0 && honest_reward >= 0.0,
                  "relative_metrics: rewards must be non-negative");
  detail::require(progress > 0.0, "relative_metrics: progress must be positive");
  detail::require(alpha >= 0.0 && alpha <= 1.0, "relative_metrics: alpha must be in [0, 1]");
  RelativeMetrics m;
  const double total = adversary_reward + honest_reward;
  if (total > 0.0) m.rho = adversary_reward / total;
  m.mu = adversary_reward / progress;
  m.nu = honest_reward / progress;
  if (m.rho) {
    if (alpha > 0.0) m.per_power_adv = *m.rho / alpha;
    if (alpha < 1.0) m.per_power_honest = (1.0 - *m.rho) / (1.0 - alpha);
  }
  return m;
}

// Blend of single-chain strategy values for a cluster of L proof slots: one
// slot behaves like the plain race, the other L-1 like the parallel split.
inline double mdp_weighted_mix(double rho_nakamoto, double rho_split, int L) {
  detail::require(L >= 1, "mdp_weighted_mix: L must be >= 1");
  detail::require(rho_nakamoto >= 0.0 && rho_nakamoto <= 1.0 && rho_split >= 0.0 && rho_split <= 1.0,
                  "mdp_weighted_mix: rho values must be in [0, 1]");
  return rho_nakamoto / L + rho_split * (static_cast<double>(L - 1) / L);
}

}  // namespace powlab
