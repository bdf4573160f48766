// Chain-withholding decision processes: model construction invariants,
// solver identities, and the reward-split/nakamoto comparison.
#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <set>
#include <stdexcept>

#include "powlab/mdp.hpp"

using namespace powlab;
using Catch::Matchers::WithinAbs;

TEST_CASE("per-settlement reward weight", "[mdp]") {
  for (double rho : {0.0, 0.25, 0.5, 0.9}) {
    CHECK_THAT(mdp_reward_value(1, 1, 1, rho), WithinAbs(0.5 - rho, 1e-15));
    // Without a shared height the weight is the plain relative form.
    CHECK_THAT(mdp_reward_value(3, 2, 0, rho), WithinAbs((1.0 - rho) * 3 - rho * 2, 1e-15));
  }
  CHECK(mdp_reward_value(0, 0, 0, 0.7) == 0.0);
}

TEST_CASE("model construction is internally consistent", "[mdp]") {
  for (MdpModelKind kind : {MdpModelKind::nakamoto, MdpModelKind::reward_split}) {
    const MdpModel m = build_mdp_model(kind, 0.3, 0.5, 20);
    REQUIRE(!m.states.empty());
    const MdpState& init = m.states[m.initial];
    CHECK(init.a == 0);
    CHECK(init.h == 0);
    CHECK(init.fork == Fork::irrelevant);
    CHECK(init.pair == 0);

    long long pair_states = 0;
    for (const MdpState& st : m.states) {
      REQUIRE(st.action_end > st.action_begin);  // adopt is always available
      CHECK(st.a <= 21);
      CHECK(st.h <= 21);
      if (st.pair) {
        ++pair_states;
        // The pair only exists while the contested first height is live.
        CHECK(st.fork == Fork::active);
        CHECK(st.a >= 1);
        CHECK(st.h >= 1);
      }
      bool can_grow = false;
      for (std::uint32_t r = st.action_begin; r < st.action_end; ++r) {
        const MdpActionRow& row = m.actions[r];
        if (row.action == MdpAction::wait || row.action == MdpAction::match) can_grow = true;
        double total = 0.0;
        for (std::uint32_t b = row.branch_begin; b < row.branch_end; ++b) {
          const MdpBranch& br = m.branches[b];
          REQUIRE(br.next >= 0);
          REQUIRE(static_cast<std::size_t>(br.next) < m.states.size());
          REQUIRE(br.prob >= 0.0);
          total += br.prob;
          if (br.p != 0) {
            CHECK(kind == MdpModelKind::reward_split);
            CHECK(br.p == 1);
          }
        }
        CHECK(total == 1.0);  // exact: the last branch takes the remainder
      }
      // Truncated forks must not grow further.
      if (st.a >= 20 || st.h >= 20) CHECK_FALSE(can_grow);
    }
    if (kind == MdpModelKind::nakamoto) {
      CHECK(pair_states == 0);
    } else {
      CHECK(pair_states > 0);
    }
  }
}

TEST_CASE("construction rejects out-of-range parameters", "[mdp]") {
  CHECK_THROWS_AS(build_mdp_model(MdpModelKind::nakamoto, 0.0, 0.5, 20), std::invalid_argument);
  CHECK_THROWS_AS(build_mdp_model(MdpModelKind::nakamoto, 0.5, 0.5, 20), std::invalid_argument);
  CHECK_THROWS_AS(build_mdp_model(MdpModelKind::nakamoto, 0.3, -0.1, 20), std::invalid_argument);
  CHECK_THROWS_AS(build_mdp_model(MdpModelKind::nakamoto, 0.3, 1.1, 20), std::invalid_argument);
  CHECK_THROWS_AS(build_mdp_model(MdpModelKind::nakamoto, 0.3, 0.5, 2), std::invalid_argument);
}

TEST_CASE("publishing immediately earns exactly the mining share", "[mdp][solver]") {
  for (MdpModelKind kind : {MdpModelKind::nakamoto, MdpModelKind::reward_split}) {
    for (double alpha : {0.1, 0.35}) {
      const MdpModel m = build_mdp_model(kind, alpha, 0.8, 80);
      const double rho = mdp_policy_revenue(m, mdp_honest_policy(m));
      INFO(to_string(kind) << " alpha=" << alpha);
      CHECK_THAT(rho, WithinAbs(alpha, 1e-4));
    }
  }
}

TEST_CASE("optimal play never loses to honesty and respects the ceiling", "[mdp][solver]") {
  const MdpModel m = build_mdp_model(MdpModelKind::nakamoto, 0.35, 1.0, 80);
  const MdpSolveResult r = solve_mdp(m);
  CHECK(r.rho >= 0.35 - 1e-4);
  CHECK(r.rho <= 0.35 / 0.65 + 1e-4);  // full network split: equal-work races always win
  CHECK(r.policy.size() == m.states.size());
  CHECK(r.probes > 0);

  SECTION("the extracted policy reproduces the optimal revenue") {
    CHECK_THAT(mdp_policy_revenue(m, r.policy), WithinAbs(r.rho, 1e-4));
  }
}

TEST_CASE("below the profitability threshold honesty is optimal", "[mdp][solver]") {
  const MdpModel m = build_mdp_model(MdpModelKind::nakamoto, 0.1, 0.0, 80);
  const MdpSolveResult r = solve_mdp(m);
  CHECK_THAT(r.rho, WithinAbs(0.1, 1e-4));
}

TEST_CASE("pair splitting trades the network race for a guaranteed half", "[mdp][solver]") {
  // With no network influence the shared pair is pure insurance: the split
  // model pays more. With gamma = 0.5 the race is worth more than the
  // insurance at every power level.
  const double nak_lo = solve_mdp(build_mdp_model(MdpModelKind::nakamoto, 0.40, 0.0, 80)).rho;
  const double spl_lo = solve_mdp(build_mdp_model(MdpModelKind::reward_split, 0.40, 0.0, 80)).rho;
  CHECK(spl_lo > nak_lo + 0.01);

  const double nak_mid = solve_mdp(build_mdp_model(MdpModelKind::nakamoto, 0.32, 0.5, 80)).rho;
  const double spl_mid = solve_mdp(build_mdp_model(MdpModelKind::reward_split, 0.32, 0.5, 80)).rho;
  CHECK(spl_mid <= nak_mid + 1e-4);
  CHECK(nak_mid - spl_mid > 0.02);  // strictly better for the defender here
}

TEST_CASE("cutting off deeper forks leaves the answer unchanged", "[mdp][solver]") {
  const double r60 = solve_mdp(build_mdp_model(MdpModelKind::nakamoto, 0.45, 0.5, 60)).rho;
  const double r80 = solve_mdp(build_mdp_model(MdpModelKind::nakamoto, 0.45, 0.5, 80)).rho;
  CHECK_THAT(r60, WithinAbs(r80, 1e-4));
}

TEST_CASE("policy evaluation validates its input", "[mdp][solver]") {
  const MdpModel m = build_mdp_model(MdpModelKind::nakamoto, 0.3, 0.5, 20);
  CHECK_THROWS_AS(mdp_policy_revenue(m, std::vector<std::int32_t>(3, 0)),
                  std::invalid_argument);
}
