#pragma once

// Average-reward MDPs for optimal chain withholding. Two models:
//
//  * nakamoto: the classic longest-chain selfish-mining decision process
//    over states (a, h, fork) = (attacker lead, honest lead, who mined last
//    / whether a published match is active).
//  * reward_split: identical, except that matching at (1, 1) merges the two
//    first-height blocks into a shared pair whose reward is split between
//    both sides. Both branches extend the combined pair afterwards, so the
//    race continues with the usual one-proof override lead, the network
//    split gamma plays no role while the pair is live, and whichever side
//    wins, the pair height settles half-and-half; abandoning the fork still
//    pays the attacker its half of the pair.
//
// The attacker's optimal relative revenue rho solves g(rho) = 0, where
// g(rho) is the optimal average reward of the MDP under the per-settlement
// reward
//
//     w(x, y, p) = (1 - rho) * x - rho * y + (rho - 1/2) * p,
//
// with x / y the heights settled for the attacker / honest miners by a
// transition and p the number of shared heights (shared heights are counted
// in both x and y; the p term removes the double count and awards each side
// one half). Since x + y - p >= 0 on every branch, g is nonincreasing in
// rho, so an outer bisection on rho applies. Each probe runs relative value
// iteration and brackets the optimal gain with the span bounds
// [min_s delta_s, max_s delta_s]; a probe stops as soon as the bracket is
// sign-certain, which keeps probes far from the root cheap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace powlab {

enum class MdpModelKind { nakamoto, reward_split };

enum class Fork : std::uint8_t { irrelevant, relevant, active };

enum class MdpAction : std::uint8_t { adopt, override_chain, wait, match };

inline const char* to_string(MdpAction a) {
  switch (a) {
    case MdpAction::adopt: return "adopt";
    case MdpAction::override_chain: return "override";
    case MdpAction::wait: return "wait";
    case MdpAction::match: return "match";
  }
  return "?";
}

inline const char* to_string(MdpModelKind k) {
  return k == MdpModelKind::nakamoto ? "nakamoto" : "reward_split";
}

// Per-settlement reward under relative-revenue weight rho.
constexpr double mdp_reward_value(double x, double y, double p, double rho) {
  return (1.0 - rho) * x - rho * y + (rho - 0.5) * p;
}

struct MdpBranch {
  double prob;
  std::int32_t next;
  std::int16_t x, y, p;  // heights settled on this branch
};

struct MdpActionRow {
  MdpAction action;
  std::uint32_t branch_begin, branch_end;
};

struct MdpState {
  std::int16_t a, h;
  Fork fork;
  std::uint8_t pair;  // 1 once the first fork height is a shared pair
  std::uint32_t action_begin, action_end;
};

struct MdpModel {
  MdpModelKind kind = MdpModelKind::nakamoto;
  double alpha = 0.0;
  double gamma = 0.0;
  int max_fork = 0;
  std::vector<MdpState> states;
  std::vector<MdpActionRow> actions;
  std::vector<MdpBranch> branches;
  std::size_t initial = 0;
};

namespace detail {

inline std::uint64_t mdp_state_key(int a, int h, Fork f, int pair) {
  return (static_cast<std::uint64_t>(a) << 32) |
         (static_cast<std::uint64_t>(h) << 8) |
         (static_cast<std::uint64_t>(f) << 2) | static_cast<std::uint64_t>(pair);
}

}  // namespace detail

// Builds the reachable state space breadth-first from (0, 0, irrelevant).
// Forks longer than max_fork are cut off: at the truncation boundary only
// adopt and (when legal) override are offered, which bounds the walk without
// biasing small-lead behaviour.
inline MdpModel build_mdp_model(MdpModelKind kind, double alpha, double gamma,
                                int max_fork = 80) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("mdp: alpha must be in (0, 0.5)");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("mdp: gamma must be in [0, 1]");
  }
  if (max_fork < 3) throw std::invalid_argument("mdp: max_fork must be >= 3");

  MdpModel m;
  m.kind = kind;
  m.alpha = alpha;
  m.gamma = gamma;
  m.max_fork = max_fork;

  std::unordered_map<std::uint64_t, std::int32_t> index;
  std::deque<std::int32_t> worklist;

  const auto intern = [&](int a, int h, Fork f, int pair) -> std::int32_t {
    const std::uint64_t key = detail::mdp_state_key(a, h, f, pair);
    const auto it = index.find(key);
    if (it != index.end()) return it->second;
    const std::int32_t id = static_cast<std::int32_t>(m.states.size());
    index.emplace(key, id);
    MdpState s;
    s.a = static_cast<std::int16_t>(a);
    s.h = static_cast<std::int16_t>(h);
    s.fork = f;
    s.pair = static_cast<std::uint8_t>(pair);
    s.action_begin = s.action_end = 0;
    m.states.push_back(s);
    worklist.push_back(id);
    return id;
  };

  struct PendingBranch {
    double prob;
    int a, h;
    Fork fork;
    int pair;
    int x, y, p;
  };

  m.initial = static_cast<std::size_t>(intern(0, 0, Fork::irrelevant, 0));

  while (!worklist.empty()) {
    const std::int32_t id = worklist.front();
    worklist.pop_front();
    const int a = m.states[id].a;
    const int h = m.states[id].h;
    const Fork fork = m.states[id].fork;
    const int pair = m.states[id].pair;
    const bool truncated = a >= max_fork || h >= max_fork;

    std::vector<std::pair<MdpAction, std::vector<PendingBranch>>> rows;

    // adopt: abandon the private branch; the honest chain settles. With a
    // shared pair the attacker keeps its half of the paired height.
    {
      std::vector<PendingBranch> b;
      const int x = pair ? 1 : 0;
      b.push_back({alpha, 1, 0, Fork::irrelevant, 0, x, h, pair});
      b.push_back({0.0, 0, 1, Fork::irrelevant, 0, x, h, pair});
      rows.emplace_back(MdpAction::adopt, std::move(b));
    }

    // override: publish just enough of the private branch to outweigh the
    // honest one. With a shared pair both branches extend the combined pair,
    // so the aggregate race is a+1 against h+1: the usual one-proof lead
    // suffices, and the settled pair height stays split between the sides.
    if (pair == 0 && a > h) {
      std::vector<PendingBranch> b;
      b.push_back({alpha, a - h, 0, Fork::irrelevant, 0, h + 1, 0, 0});
      b.push_back({0.0, a - h - 1, 1, Fork::relevant, 0, h + 1, 0, 0});
      rows.emplace_back(MdpAction::override_chain, std::move(b));
    } else if (pair == 1 && a > h) {
      std::vector<PendingBranch> b;
      b.push_back({alpha, a - h, 0, Fork::irrelevant, 0, h + 1, 1, 1});
      b.push_back({0.0, a - h - 1, 1, Fork::relevant, 0, h + 1, 1, 1});
      rows.emplace_back(MdpAction::override_chain, std::move(b));
    }

    if (!truncated) {
      // wait: keep mining quietly.
      if (pair == 1) {
        std::vector<PendingBranch> b;
        b.push_back({alpha, a + 1, h, Fork::active, 1, 0, 0, 0});
        b.push_back({0.0, a, h + 1, Fork::active, 1, 0, 0, 0});
        rows.emplace_back(MdpAction::wait, std::move(b));
      } else if (fork != Fork::active) {
        std::vector<PendingBranch> b;
        b.push_back({alpha, a + 1, h, Fork::irrelevant, 0, 0, 0, 0});
        b.push_back({0.0, a, h + 1, Fork::relevant, 0, 0, 0, 0});
        rows.emplace_back(MdpAction::wait, std::move(b));
      } else {
        // A published match is active: a fraction gamma of honest power
        // mines on the attacker's copy. If it succeeds the matched prefix
        // settles for the attacker.
        std::vector<PendingBranch> b;
        b.push_back({alpha, a + 1, h, Fork::active, 0, 0, 0, 0});
        b.push_back({gamma * (1.0 - alpha), a - h, 1, Fork::relevant, 0, h, 0, 0});
        b.push_back({0.0, a, h + 1, Fork::relevant, 0, 0, 0, 0});
        rows.emplace_back(MdpAction::wait, std::move(b));
      }

      // match: publish a same-height copy right after an honest block.
      if (pair == 0 && fork == Fork::relevant) {
        if (kind == MdpModelKind::reward_split && a == 1 && h == 1) {
          // First-height tie: the two blocks merge into a shared pair.
          std::vector<PendingBranch> b;
          b.push_back({alpha, 2, 1, Fork::active, 1, 0, 0, 0});
          b.push_back({0.0, 1, 2, Fork::active, 1, 0, 0, 0});
          rows.emplace_back(MdpAction::match, std::move(b));
        } else if (a >= h && h >= (kind == MdpModelKind::reward_split ? 2 : 1)) {
          std::vector<PendingBranch> b;
          b.push_back({alpha, a + 1, h, Fork::active, 0, 0, 0, 0});
          b.push_back({gamma * (1.0 - alpha), a - h, 1, Fork::relevant, 0, h, 0, 0});
          b.push_back({0.0, a, h + 1, Fork::relevant, 0, 0, 0, 0});
          rows.emplace_back(MdpAction::match, std::move(b));
        }
      }
    }

    m.states[id].action_begin = static_cast<std::uint32_t>(m.actions.size());
    for (auto& [action, pending] : rows) {
      MdpActionRow row;
      row.action = action;
      row.branch_begin = static_cast<std::uint32_t>(m.branches.size());
      double used = 0.0;
      for (std::size_t i = 0; i < pending.size(); ++i) {
        MdpBranch br;
        // The final branch takes the exact remainder so each row sums to 1.
        br.prob = (i + 1 == pending.size()) ? 1.0 - used : pending[i].prob;
        used += br.prob;
        br.next = intern(pending[i].a, pending[i].h, pending[i].fork, pending[i].pair);
        br.x = static_cast<std::int16_t>(pending[i].x);
        br.y = static_cast<std::int16_t>(pending[i].y);
        br.p = static_cast<std::int16_t>(pending[i].p);
        m.branches.push_back(br);
      }
      row.branch_end = static_cast<std::uint32_t>(m.branches.size());
      m.actions.push_back(row);
    }
    m.states[id].action_end = static_cast<std::uint32_t>(m.actions.size());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct MdpSolveOptions {
  double rho_tol = 1e-5;    // bisection width on rho
  double span_tol = 1e-7;   // gain-bracket width that counts as converged
  long long max_sweeps = 60000;  // per probe
};

struct MdpSolveResult {
  double rho = 0.0;
  long long total_sweeps = 0;
  int probes = 0;
  double residual_span = 0.0;  // gain bracket width of the final probe
  std::vector<std::int32_t> policy;  // per-state offset into its action rows
};

namespace detail {

struct GainProbe {
  double lo = 0.0, hi = 0.0;
  long long sweeps = 0;
  bool positive() const { return lo + hi > 0.0; }
};

// Relative value iteration at fixed rho. `subset` (optional) restricts the
// sweep to the given state indices; `policy` (optional) pins each state to
// one action row. The returned bracket [lo, hi] contains the optimal (or
// policy) gain for any starting V, so a sign-certain bracket ends the probe.
inline GainProbe mdp_gain_probe(const MdpModel& m, double rho,
                                std::vector<double>& V,
                                const MdpSolveOptions& opt,
                                const std::vector<std::int32_t>* subset = nullptr,
                                const std::vector<std::int32_t>* policy = nullptr,
                                std::vector<std::int32_t>* policy_out = nullptr) {
  const std::size_t n = m.states.size();
  if (V.size() != n) V.assign(n, 0.0);
  std::vector<double> W(m.branches.size());
  for (std::size_t i = 0; i < m.branches.size(); ++i) {
    W[i] = mdp_reward_value(m.branches[i].x, m.branches[i].y, m.branches[i].p, rho);
  }
  std::vector<double> Vn(n, 0.0);
  if (policy_out) policy_out->assign(n, 0);

  std::vector<std::int32_t> all;
  if (!subset) {
    all.resize(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<std::int32_t>(i);
  }
  const std::vector<std::int32_t>& sweep = subset ? *subset : all;

  GainProbe probe;
  probe.lo = -std::numeric_limits<double>::infinity();
  probe.hi = std::numeric_limits<double>::infinity();
  double damping = 1.0;  // lowered if the span stalls (periodic chains)
  double stall_span = std::numeric_limits<double>::infinity();

  for (long long it = 1; it <= opt.max_sweeps; ++it) {
    double min_d = std::numeric_limits<double>::infinity();
    double max_d = -std::numeric_limits<double>::infinity();
    for (std::int32_t s : sweep) {
      const MdpState& st = m.states[s];
      double best = -std::numeric_limits<double>::infinity();
      std::int32_t best_row = 0;
      const std::uint32_t row_lo = st.action_begin;
      const std::uint32_t row_hi = policy ? row_lo + (*policy)[s] + 1 : st.action_end;
      for (std::uint32_t r = policy ? row_lo + (*policy)[s] : row_lo; r < row_hi; ++r) {
        const MdpActionRow& row = m.actions[r];
        double v = 0.0;
        for (std::uint32_t b = row.branch_begin; b < row.branch_end; ++b) {
          v += m.branches[b].prob * (W[b] + V[m.branches[b].next]);
        }
        if (v > best) {
          best = v;
          best_row = static_cast<std::int32_t>(r - row_lo);
        }
      }
      const double d = best - V[s];
      min_d = std::min(min_d, d);
      max_d = std::max(max_d, d);
      Vn[s] = V[s] + damping * d;
      if (policy_out) (*policy_out)[s] = best_row;
    }
    const double ref = Vn[m.initial];
    for (std::int32_t s : sweep) Vn[s] -= ref;
    for (std::int32_t s : sweep) V[s] = Vn[s];

    probe.lo = min_d;
    probe.hi = max_d;
    probe.sweeps = it;
    if (min_d > 0.0 || max_d < 0.0) return probe;           // sign-certain
    if (max_d - min_d < opt.span_tol) return probe;         // converged
    if (it % 2000 == 0) {                                   // stall guard
      const double span = max_d - min_d;
      if (span > 0.5 * stall_span && damping == 1.0) damping = 0.5;
      stall_span = span;
    }
  }
  return probe;
}

}  // namespace detail

// Optimal relative revenue: bisect rho until the optimal gain changes sign.
// The value function is warm-started across probes, so only the probes near
// the root need deep convergence.
inline MdpSolveResult solve_mdp(const MdpModel& m, MdpSolveOptions opt = {}) {
  MdpSolveResult out;
  std::vector<double> V(m.states.size(), 0.0);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > opt.rho_tol) {
    const double mid = 0.5 * (lo + hi);
    const detail::GainProbe p = detail::mdp_gain_probe(m, mid, V, opt);
    out.total_sweeps += p.sweeps;
    ++out.probes;
    if (p.positive()) lo = mid; else hi = mid;
  }
  out.rho = 0.5 * (lo + hi);
  const detail::GainProbe fin =
      detail::mdp_gain_probe(m, out.rho, V, opt, nullptr, nullptr, &out.policy);
  out.total_sweeps += fin.sweeps;
  ++out.probes;
  out.residual_span = fin.hi - fin.lo;
  return out;
}

// States reachable from the initial state when every state plays its pinned
// action row.
inline std::vector<std::int32_t> mdp_policy_reachable(
    const MdpModel& m, const std::vector<std::int32_t>& policy) {
  std::vector<char> seen(m.states.size(), 0);
  std::vector<std::int32_t> order;
  std::deque<std::int32_t> work;
  work.push_back(static_cast<std::int32_t>(m.initial));
  seen[m.initial] = 1;
  while (!work.empty()) {
    const std::int32_t s = work.front();
    work.pop_front();
    order.push_back(s);
    const MdpActionRow& row = m.actions[m.states[s].action_begin + policy[s]];
    for (std::uint32_t b = row.branch_begin; b < row.branch_end; ++b) {
      const std::int32_t nx = m.branches[b].next;
      if (m.branches[b].prob > 0.0 && !seen[nx]) {
        seen[nx] = 1;
        work.push_back(nx);
      }
    }
  }
  return order;
}

// Average relative revenue of a fixed policy (bisection on rho over the
// policy-reachable subset).
inline double mdp_policy_revenue(const MdpModel& m,
                                 const std::vector<std::int32_t>& policy,
                                 MdpSolveOptions opt = {}) {
  if (policy.size() != m.states.size()) {
    throw std::invalid_argument("mdp: policy size mismatch");
  }
  const std::vector<std::int32_t> subset = mdp_policy_reachable(m, policy);
  std::vector<double> V(m.states.size(), 0.0);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > opt.rho_tol) {
    const double mid = 0.5 * (lo + hi);
    const detail::GainProbe p = detail::mdp_gain_probe(m, mid, V, opt, &subset, &policy);
    if (p.positive()) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// The honest baseline: publish every block immediately (override as soon as
// a = 1, adopt whenever behind). Its revenue equals alpha exactly.
inline std::vector<std::int32_t> mdp_honest_policy(const MdpModel& m) {
  std::vector<std::int32_t> policy(m.states.size(), 0);
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    const MdpState& st = m.states[s];
    std::int32_t adopt_row = 0, override_row = -1;
    for (std::uint32_t r = st.action_begin; r < st.action_end; ++r) {
      if (m.actions[r].action == MdpAction::adopt) {
        adopt_row = static_cast<std::int32_t>(r - st.action_begin);
      } else if (m.actions[r].action == MdpAction::override_chain) {
        override_row = static_cast<std::int32_t>(r - st.action_begin);
      }
    }
    policy[s] = (st.a > st.h && override_row >= 0) ? override_row : adopt_row;
  }
  return policy;
}

// Smallest mining share whose optimal policy beats honest mining.
inline double mdp_profit_threshold(MdpModelKind kind, double gamma,
                                   int max_fork = 80, double alpha_tol = 1e-3,
                                   MdpSolveOptions opt = {.rho_tol = 3e-5}) {
  const double margin = 1e-4;
  const auto profitable = [&](double alpha) {
    const MdpModel m = build_mdp_model(kind, alpha, gamma, max_fork);
    return solve_mdp(m, opt).rho > alpha + margin;
  };
  double lo = 0.01, hi = 0.499;
  if (profitable(lo)) return lo;
  if (!profitable(hi)) return hi;
  while (hi - lo > alpha_tol) {
    const double mid = 0.5 * (lo + hi);
    if (profitable(mid)) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace powlab
