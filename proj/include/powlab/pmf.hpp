#pragma once

// Probability mass functions over non-negative integers with explicit
// truncation bookkeeping. Every builder records how much probability was cut
// off, and convolution propagates those masses conservatively, so a tail
// probability computed from these objects carries a rigorous error interval
// instead of a silent approximation.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace powlab {

struct Pmf {
  std::vector<double> p;         // p[k] = P(X = k)
  double truncation_mass = 0.0;  // mass beyond the stored support

  double total() const {
    double s = 0.0, c = 0.0;
    for (double v : p) {
      const double y = v - c;
      const double t = s + y;
      c = (t - s) - y;
      s = t;
    }
    return s;
  }

  // Known lower bound on P(X >= k); missing truncated mass could add to it.
  double tail_at_least(std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = k; i < p.size(); ++i) s += p[i];
    return s;
  }
};

namespace detail {

inline constexpr std::size_t kMaxPmfLength = 1u << 20;

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("pmf: truncation epsilon must be in (0, 1)");
  }
}

}  // namespace detail

// Stationary lead of a reflected birth-death walk that steps down with
// probability success_p and up otherwise: P(M = k) = (1 - r) r^k with
// r = (1 - success_p) / success_p. Requires success_p > 1/2, i.e. the walk
// must drift downward, otherwise no stationary lead exists.
inline Pmf geometric_lead_pmf(double success_p, double eps = 1e-12) {
  detail::check_eps(eps);
  if (!(success_p > 0.5 && success_p <= 1.0)) {
    throw std::domain_error("geometric_lead_pmf: success probability must exceed 1/2");
  }
  const double r = (1.0 - success_p) / success_p;
  Pmf out;
  double mass = 1.0;  // remaining tail: r^k before emitting p[k]
  double pk = 1.0 - r;
  while (mass > eps && out.p.size() < detail::kMaxPmfLength) {
    out.p.push_back(pk);
    mass *= r;
    pk *= r;
  }
  out.truncation_mass = mass;
  return out;
}

// Number of failures before the count-th success in Bernoulli(success_p)
// trials: P(S = k) = C(k+count-1, k) success_p^count (1-success_p)^k.
inline Pmf negbin_pmf(int count, double success_p, double eps = 1e-12) {
  detail::check_eps(eps);
  if (count < 1) throw std::invalid_argument("negbin_pmf: count must be >= 1");
  if (!(success_p > 0.0 && success_p <= 1.0)) {
    throw std::invalid_argument("negbin_pmf: success probability must be in (0, 1]");
  }
  Pmf out;
  double pk = std::pow(success_p, count);
  if (pk == 0.0) throw std::domain_error("negbin_pmf: success_p^count underflows");
  double cum = 0.0;
  const double q = 1.0 - success_p;
  for (std::size_t k = 0; k < detail::kMaxPmfLength; ++k) {
    out.p.push_back(pk);
    cum += pk;
    if (1.0 - cum <= eps) break;
    pk *= q * (static_cast<double>(k) + count) / (static_cast<double>(k) + 1.0);
  }
  out.truncation_mass = std::max(0.0, 1.0 - cum);
  return out;
}

// Sum of `count` independent Poisson variables with rate `rate_each`:
// a Poisson with mean count * rate_each.
inline Pmf poisson_sum_pmf(int count, double rate_each, double eps = 1e-12) {
  detail::check_eps(eps);
  if (count < 0 || rate_each < 0.0) {
    throw std::invalid_argument("poisson_sum_pmf: count and rate must be non-negative");
  }
  const double lambda = static_cast<double>(count) * rate_each;
  Pmf out;
  if (lambda == 0.0) {
    out.p = {1.0};
    return out;
  }
  double pk = std::exp(-lambda);
  if (pk == 0.0) throw std::domain_error("poisson_sum_pmf: mean too large for linear-space pmf");
  double cum = 0.0;
  for (std::size_t k = 0; k < detail::kMaxPmfLength; ++k) {
    out.p.push_back(pk);
    cum += pk;
    if (1.0 - cum <= eps && static_cast<double>(k) >= lambda) break;
    pk *= lambda / (static_cast<double>(k) + 1.0);
  }
  out.truncation_mass = std::max(0.0, 1.0 - cum);
  return out;
}

// Distribution of the sum of two independent variables. Truncation masses
// combine as 1 - (1-ta)(1-tb) = ta + tb - ta*tb: any sample lost in either
// operand is lost in the sum.
inline Pmf convolve(const Pmf& a, const Pmf& b) {
  if (a.p.empty() || b.p.empty()) throw std::invalid_argument("convolve: empty pmf");
  Pmf out;
  out.p.assign(a.p.size() + b.p.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    const double ai = a.p[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.p.size(); ++j) {
      out.p[i + j] += ai * b.p[j];
    }
  }
  out.truncation_mass =
      a.truncation_mass + b.truncation_mass - a.truncation_mass * b.truncation_mass;
  return out;
}

}  // namespace powlab
