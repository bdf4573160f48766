#pragma once

// Monte Carlo withholding attacks against three cluster/vote families:
//
//  * bobtail: lowest-hash-of-L leadership. The adversary mines hidden,
//    assigns honest support values, and when it owns the lowest hash of the
//    first L proofs it publishes only that proof, forcing honest miners to
//    race it (beat the published hash or assemble L fresh proofs) while it
//    mines a private lead for the following clusters.
//  * tree: depth-rewarded proof trees. The adversary withholds its proofs,
//    completes the cluster privately, and overrides the honest copy with
//    one extra next-height proof once honest miners catch up.
//  * dag: same mechanics as tree, but each settled proof earns one unit per
//    proof it is comparable with (ancestors + descendants + itself).
//
// Proof arrival is a Bernoulli(alpha) process: every next proof belongs to
// the adversary with probability alpha. Hash values are uniform on [0,1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "powlab/rng.hpp"

namespace powlab {

enum class AttackStyle { honest, bobtail, tree, dag };

inline const char* to_string(AttackStyle s) {
  switch (s) {
    case AttackStyle::honest: return "honest";
    case AttackStyle::bobtail: return "bobtail";
    case AttackStyle::tree: return "tree";
    case AttackStyle::dag: return "dag";
  }
  return "?";
}

struct AttackParams {
  AttackStyle style = AttackStyle::honest;
  double alpha = 0.0;       // adversarial share of mining power, [0, 0.5)
  int L = 50;               // proofs per cluster
  long long blocks = 10000; // settled clusters to simulate
  std::uint64_t seed = 1;
  std::uint64_t stream = 0; // substream (sweep point / repetition index)
  bool bobtail_bonus_rewards = false;  // include support-bonus units
  bool record_trace = false;           // keep per-cluster (a_n, b_n)

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 0.5)) {
      throw std::invalid_argument("attack: alpha must be in [0, 0.5)");
    }
    if (L < 1) throw std::invalid_argument("attack: L must be >= 1");
    if (blocks < 1) throw std::invalid_argument("attack: blocks must be >= 1");
  }
};

struct SimReport {
  long long adversary_reward = 0;  // unit: proofs (bobtail/tree/honest) or
  long long honest_reward = 0;     //        comparability counts (dag)
  long long blocks_settled = 0;
  long long orphaned_honest = 0;       // honest proofs mined but never settled
  long long orphaned_adversarial = 0;  // adversarial proofs forfeited
  // Depth-scaled tree accounting in units of 1/L of a cluster reward:
  // every settled cluster adds depth*L to the total and depth*adv_count to
  // the adversarial side, so shares stay exact in integers.
  long long depth_units_adversary = 0;
  long long depth_units_total = 0;
  double relative_reward = 0.0;   // adversary / (adversary + honest)
  double stderr_estimate = 0.0;   // batch-mean standard error of the ratio
  std::vector<std::pair<double, double>> trace;  // (a_n, b_n) per cluster
};

// ---------------------------------------------------------------------------
// Visibility rewards of one settled cluster in the dag style.
// ---------------------------------------------------------------------------

enum class ProofTag {
  advantage,          // adversarial, mined before the released lead was shared
  late_adversarial,   // adversarial, mined while the cluster filled
  honest,
};

struct DagRewards {
  std::vector<long long> per_proof;
  long long adversary_total = 0;
  long long honest_total = 0;
};

// Per-proof comparability counts, derived from who can reference whom:
//  * the released lead proof (first entry when released_lead_first) is
//    public before everything else and adversarial afterwards, so it is
//    comparable with all n proofs;
//  * advantage proofs are hidden and predate all honest proofs: they are
//    comparable with the adversarial set only;
//  * late adversarial proofs additionally reference the honest proofs that
//    arrived before them;
//  * honest proofs reference one another and the released proof, and are
//    referenced by the late adversarial proofs mined after them.
// Verified against brute-force transitive-closure counting on the explicit
// reference DAG for every cluster size up to 8.
inline DagRewards dag_block_rewards(const std::vector<ProofTag>& arrival_order,
                                    bool released_lead_first) {
  const std::size_t n = arrival_order.size();
  if (n == 0) throw std::invalid_argument("dag_block_rewards: empty cluster");
  if (released_lead_first && arrival_order[0] != ProofTag::advantage &&
      arrival_order[0] != ProofTag::late_adversarial) {
    throw std::invalid_argument("dag_block_rewards: released lead must be adversarial");
  }
  long long adv = 0, hon = 0;
  std::size_t advantage_end = released_lead_first ? 1 : 0;
  bool in_prefix = true;
  for (std::size_t i = released_lead_first ? 1 : 0; i < n; ++i) {
    if (arrival_order[i] == ProofTag::advantage) {
      if (!in_prefix || !released_lead_first) {
        throw std::invalid_argument(
            "dag_block_rewards: advantage proofs must directly follow a released lead");
      }
      advantage_end = i + 1;
    } else {
      in_prefix = false;
    }
  }
  for (ProofTag t : arrival_order) {
    if (t == ProofTag::honest) ++hon; else ++adv;
  }
  long long greens_total = 0;
  for (std::size_t i = advantage_end; i < n; ++i) {
    if (arrival_order[i] != ProofTag::honest) ++greens_total;
  }

  DagRewards out;
  out.per_proof.resize(n);
  long long honest_before = 0, greens_before = 0;
  for (std::size_t i = 0; i < n; ++i) {
    long long reward;
    if (released_lead_first && i == 0) {
      reward = static_cast<long long>(n);
    } else if (arrival_order[i] == ProofTag::advantage) {
      reward = adv;
    } else if (arrival_order[i] == ProofTag::late_adversarial) {
      reward = adv + honest_before;
      ++greens_before;
    } else {
      reward = hon + (released_lead_first ? 1 : 0) + (greens_total - greens_before);
      ++honest_before;
    }
    out.per_proof[i] = reward;
    if (arrival_order[i] == ProofTag::honest) {
      out.honest_total += reward;
    } else {
      out.adversary_total += reward;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared accounting helpers
// ---------------------------------------------------------------------------

namespace detail {

class RatioBatcher {
 public:
  RatioBatcher(long long blocks, int batches = 100)
      : per_batch_(std::max<long long>(1, blocks / std::max(1, batches))) {}

  void add(long long adv, long long hon, long long block_index) {
    adv_ += adv;
    hon_ += hon;
    if ((block_index + 1) % per_batch_ == 0) flush();
  }

  double stderr_estimate() {
    flush();
    const std::size_t b = ratios_.size();
    if (b < 2) return 0.0;
    double mean = 0.0;
    for (double r : ratios_) mean += r;
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (double r : ratios_) var += (r - mean) * (r - mean);
    var /= static_cast<double>(b - 1);
    return std::sqrt(var / static_cast<double>(b));
  }

 private:
  void flush() {
    if (adv_ + hon_ > 0) ratios_.push_back(static_cast<double>(adv_) / static_cast<double>(adv_ + hon_));
    adv_ = hon_ = 0;
  }
  long long per_batch_;
  long long adv_ = 0, hon_ = 0;
  std::vector<double> ratios_;
};

struct ProofRecord {  // bobtail bonus bookkeeping
  bool adversarial;
  double hash;
  double support;  // lowest same-cluster hash its miner had seen, 2.0 = none
  bool settled;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Baseline: everyone honest. Relative reward = adversarial proof fraction.
// ---------------------------------------------------------------------------

inline SimReport simulate_honest(const AttackParams& params) {
  params.validate();
  RngStream rng(params.seed, params.stream);
  SimReport rep;
  detail::RatioBatcher batcher(params.blocks);
  for (long long b = 0; b < params.blocks; ++b) {
    long long adv = 0;
    for (int i = 0; i < params.L; ++i) {
      if (rng.next_bernoulli(params.alpha)) ++adv;
    }
    rep.adversary_reward += adv;
    rep.honest_reward += params.L - adv;
    ++rep.blocks_settled;
    batcher.add(adv, params.L - adv, b);
    if (params.record_trace) {
      rep.trace.emplace_back(static_cast<double>(adv) / params.L, 0.0);
    }
  }
  const double total = static_cast<double>(rep.adversary_reward + rep.honest_reward);
  rep.relative_reward = total > 0 ? rep.adversary_reward / total : 0.0;
  rep.stderr_estimate = batcher.stderr_estimate();
  return rep;
}

// ---------------------------------------------------------------------------
// Bobtail withholding
// ---------------------------------------------------------------------------

inline SimReport simulate_bobtail(const AttackParams& params) {
  params.validate();
  RngStream rng(params.seed, params.stream);
  const int L = params.L;
  const double alpha = params.alpha;
  const bool bonus = params.bobtail_bonus_rewards;

  SimReport rep;
  detail::RatioBatcher batcher(params.blocks);

  // Hidden adversarial proofs in mining order. The adversary mines a private
  // sequential chain, so consuming L proofs at a time from the front matches
  // the cluster each proof committed to when it was mined.
  std::deque<double> pool;
  bool has_released = false;   // one already-public lead proof for this cluster
  double released_hash = 0.0;

  std::vector<detail::ProofRecord> records;  // only populated in bonus mode

  for (long long block = 0; block < params.blocks; ++block) {
    records.clear();
    const long long carried = static_cast<long long>(pool.size());

    // Assemble the cluster: the released lead (if any), then hidden proofs
    // from the pool front, then fresh mining until L proofs exist in total.
    const int capacity = L - (has_released ? 1 : 0);
    int adv_hidden = static_cast<int>(std::min<std::size_t>(pool.size(), capacity));
    double adv_min = has_released ? released_hash : 2.0;
    int min_from_pool = -1;
    double block_min_all = has_released ? released_hash : 2.0;

    if (bonus && has_released) records.push_back({true, released_hash, 2.0, false});
    for (int i = 0; i < adv_hidden; ++i) {
      if (bonus) records.push_back({true, pool[i], block_min_all, false});
      if (pool[i] < adv_min) {
        adv_min = pool[i];
        min_from_pool = i;
      }
      block_min_all = std::min(block_min_all, pool[i]);
    }

    int hon_count = 0;
    double hon_min = 2.0;
    double public_min = has_released ? released_hash : 2.0;
    while ((has_released ? 1 : 0) + adv_hidden + hon_count < L) {
      const double h = rng.next_uniform();
      if (rng.next_bernoulli(alpha)) {
        if (bonus) records.push_back({true, h, block_min_all, false});
        pool.push_back(h);
        // The pool was shorter than the cluster capacity (otherwise the
        // cluster would already hold L proofs), so this proof is part of it.
        if (h < adv_min) {
          adv_min = h;
          min_from_pool = adv_hidden;
        }
        ++adv_hidden;
      } else {
        if (bonus) records.push_back({false, h, public_min, false});
        hon_min = std::min(hon_min, h);
        public_min = std::min(public_min, h);
        ++hon_count;
      }
      block_min_all = std::min(block_min_all, h);
    }

    const int adv_total = adv_hidden + (has_released ? 1 : 0);
    const double a_frac = static_cast<double>(adv_total) / L;
    long long block_adv = 0, block_hon = 0;

    if (adv_total == 0 || hon_min < adv_min) {
      // An honest proof holds the lowest hash: the adversary gains nothing
      // by stalling and releases everything.
      block_adv = adv_total;
      block_hon = L - adv_total;
      pool.erase(pool.begin(), pool.begin() + adv_hidden);
      has_released = false;
      if (bonus) {
        for (auto& r : records) r.settled = true;
        const double winner = hon_min;
        for (const auto& r : records) {
          if (r.hash != winner && r.support == winner) {
            (r.adversarial ? block_adv : block_hon) += 1;
          }
        }
      }
    } else {
      // The adversary owns the lowest hash. It publishes only that proof and
      // refuses to assemble the cluster; honest miners race it: they first
      // finish the public copy of the cluster (the withheld proofs leave
      // holes), then start over on a fresh cluster that ignores the released
      // minimum, giving up once they either beat that minimum or collect L
      // fresh proofs. The adversary mines a lead for the following clusters
      // the whole time.
      const int still_hidden = adv_hidden - (min_from_pool >= 0 ? 1 : 0);
      public_min = std::min(public_min, adv_min);

      long long race_honest = 0;
      bool beat = false;
      std::vector<double> race_hashes;  // settle only in the forfeit branch
      std::vector<double> race_support;
      const auto race_draw = [&](bool& got_honest, double& h) {
        h = rng.next_uniform();
        if (rng.next_bernoulli(alpha)) {
          if (bonus) records.push_back({true, h, block_min_all, false});
          pool.push_back(h);
          block_min_all = std::min(block_min_all, h);
          got_honest = false;
          return;
        }
        ++race_honest;
        if (bonus) {
          race_hashes.push_back(h);
          race_support.push_back(public_min);
        }
        public_min = std::min(public_min, h);
        block_min_all = std::min(block_min_all, h);
        got_honest = true;
      };

      // Completion phase: honest miners first replace every withheld proof in
      // the public copy of the cluster. Even if one of these fresh proofs
      // beats the released minimum, they cannot act before the cluster has L
      // public proofs, so this phase always runs to completion.
      while (race_honest < still_hidden) {
        bool got_honest = false;
        double h = 0.0;
        race_draw(got_honest, h);
        if (got_honest && h < adv_min) beat = true;
      }

      // Restart phase: the released minimum still leads, so assembling the
      // public cluster is pointless (only its owner could finish the block).
      // Honest miners start over on a cluster that ignores it, giving up the
      // height once they either beat that minimum or collect L fresh proofs.
      if (!beat) {
        long long restart = 0;
        while (restart < L) {
          bool got_honest = false;
          double h = 0.0;
          race_draw(got_honest, h);
          if (!got_honest) continue;
          ++restart;
          if (h < adv_min) {
            beat = true;
            break;
          }
        }
      }

      // Either way the honest side now has a complete rival cluster, so the
      // withheld cluster needs one extra next-height proof to override it.
      const bool lead_available = pool.size() > static_cast<std::size_t>(adv_hidden);
      if (lead_available) {
        // Override: the withheld cluster settles (it still contains the
        // original honest proofs), every racing proof dies, and one
        // next-cluster proof is released to keep the published chain
        // strictly heaviest.
        block_adv = adv_total;
        block_hon = L - adv_total;
        rep.orphaned_honest += race_honest;
        pool.erase(pool.begin(), pool.begin() + adv_hidden);
        released_hash = pool.front();
        pool.pop_front();
        has_released = true;
        if (bonus) {
          // Settled proofs are precisely the first L records (the cluster as
          // it stood when it filled); race-time records never settle here.
          int settled_count = 0;
          for (auto& r : records) {
            if (settled_count < L) {
              r.settled = true;
              ++settled_count;
            }
          }
          const double winner = adv_min;
          for (const auto& r : records) {
            if (r.settled && r.hash != winner && r.support == winner) {
              (r.adversarial ? block_adv : block_hon) += 1;
            }
          }
        }
      } else if (beat) {
        // Forfeit against a rival cluster led by a fresh honest proof. The
        // released minimum is among the L lowest public proofs, so it still
        // settles — as does the carried release if the honest side lacks the
        // public proofs to fill the cluster without it. Everything hidden is
        // lost.
        const long long honest_public = (L - adv_total) + race_honest;
        block_hon = std::min<long long>(L - 1, honest_public);
        block_adv = L - block_hon;
        rep.orphaned_adversarial += adv_total - block_adv;
        rep.orphaned_honest += honest_public - block_hon;
        pool.clear();
        has_released = false;
        if (bonus) {
          // Racing proofs mined after the winning hash appeared may name it
          // as support; only those can earn bonus units here (the withheld
          // proofs and the originals all predate it).
          double winner = 2.0;
          for (const double h : race_hashes) winner = std::min(winner, h);
          for (std::size_t i = 0; i < race_hashes.size(); ++i) {
            if (race_hashes[i] != winner && race_support[i] == winner) block_hon += 1;
          }
        }
      } else {
        // Forfeit against a completed restart cluster: L fresh proofs that
        // ignore the released minimum entirely. The adversary loses the
        // cluster, the released proof, and its lead.
        block_adv = 0;
        block_hon = L;
        rep.orphaned_adversarial += adv_total;
        rep.orphaned_honest += (L - adv_total) + race_honest - L;
        pool.clear();
        has_released = false;
        if (bonus) {
          // Restart proofs are the race entries after the completion phase.
          const std::size_t first = static_cast<std::size_t>(still_hidden);
          double winner = 2.0;
          for (std::size_t i = first; i < race_hashes.size(); ++i) {
            winner = std::min(winner, race_hashes[i]);
          }
          for (std::size_t i = first; i < race_hashes.size(); ++i) {
            if (race_hashes[i] != winner && race_support[i] == winner) block_hon += 1;
          }
        }
      }
    }

    rep.adversary_reward += block_adv;
    rep.honest_reward += block_hon;
    ++rep.blocks_settled;
    batcher.add(block_adv, block_hon, block);
    if (params.record_trace) {
      rep.trace.emplace_back(a_frac, static_cast<double>(carried) / L);
    }
  }

  const double total = static_cast<double>(rep.adversary_reward + rep.honest_reward);
  rep.relative_reward = total > 0 ? rep.adversary_reward / total : 0.0;
  rep.stderr_estimate = batcher.stderr_estimate();
  return rep;
}

// ---------------------------------------------------------------------------
// Tree / dag withholding (identical mechanics, different accounting)
// ---------------------------------------------------------------------------

inline SimReport simulate_withholding(const AttackParams& params) {
  params.validate();
  if (params.style != AttackStyle::tree && params.style != AttackStyle::dag) {
    throw std::invalid_argument("simulate_withholding: style must be tree or dag");
  }
  const bool dag = params.style == AttackStyle::dag;
  RngStream rng(params.seed, params.stream);
  const int L = params.L;
  const double alpha = params.alpha;
  // Threshold for attacking at all: expected catch-up cost exceeds the gain
  // when fewer than 1/alpha proofs are hidden.
  const double hide_threshold = alpha > 0.0 ? 1.0 / alpha : std::numeric_limits<double>::infinity();

  SimReport rep;
  detail::RatioBatcher batcher(params.blocks);

  bool has_released = false;  // released next-height lead proof
  long long violets = 0;      // hidden lead mined before that release

  std::vector<ProofTag> tags;
  tags.reserve(static_cast<std::size_t>(L) + 8);

  for (long long block = 0; block < params.blocks; ++block) {
    const long long carried = violets + (has_released ? 1 : 0);
    tags.clear();
    if (has_released) tags.push_back(ProofTag::late_adversarial);  // placeholder, first slot
    for (long long i = 0; i < violets; ++i) tags.push_back(ProofTag::advantage);

    // Depth bookkeeping: the adversary chains its own proofs, honest miners
    // chain the public ones, so parallel (hidden vs public) work collapses
    // onto whichever spine is deeper.
    long long depth_all = carried;      // released proof + hidden chain
    long long depth_public = has_released ? 1 : 0;

    long long hidden = violets;
    long long public_cnt = has_released ? 1 : 0;
    while (public_cnt + hidden < L) {
      if (rng.next_bernoulli(alpha)) {
        ++hidden;
        tags.push_back(ProofTag::late_adversarial);
        depth_all += 1;
      } else {
        ++public_cnt;
        tags.push_back(ProofTag::honest);
        depth_public += 1;
        depth_all = std::max(depth_all, depth_public);
      }
    }

    const long long adv_total = hidden + (has_released ? 1 : 0);
    const double a_frac = static_cast<double>(adv_total) / L;
    long long block_adv = 0, block_hon = 0;
    long long settled_depth = 0, settled_adv_count = 0;

    if (static_cast<double>(hidden) > hide_threshold) {
      // Attack round: wait for the honest copy of the cluster to complete,
      // banking lead proofs for the next height in the meantime.
      long long deficit = L - public_cnt;
      long long lead = 0;
      while (deficit > 0) {
        if (rng.next_bernoulli(alpha)) ++lead; else --deficit;
      }
      if (lead >= 1) {
        // Override with the full cluster plus one next-height proof.
        block_adv = adv_total;
        block_hon = L - adv_total;
        settled_depth = depth_all;
        settled_adv_count = adv_total;
        rep.orphaned_honest += L - public_cnt;
        if (dag) {
          const DagRewards r = dag_block_rewards(tags, has_released);
          block_adv = r.adversary_total;
          block_hon = r.honest_total;
        }
        has_released = true;
        violets = lead - 1;
      } else {
        // Nothing to override with: forfeit the hidden proofs. The honest
        // cluster (which still contains the previously released proof)
        // settles.
        rep.orphaned_adversarial += hidden;
        block_adv = has_released ? 1 : 0;
        block_hon = L - block_adv;
        settled_depth = L;  // fully sequential public cluster
        settled_adv_count = has_released ? 1 : 0;
        if (dag) {
          std::vector<ProofTag> settled_tags;
          if (has_released) settled_tags.push_back(ProofTag::late_adversarial);
          while (settled_tags.size() < static_cast<std::size_t>(L)) {
            settled_tags.push_back(ProofTag::honest);
          }
          const DagRewards r = dag_block_rewards(settled_tags, has_released);
          block_adv = r.adversary_total;
          block_hon = r.honest_total;
        }
        has_released = false;
        violets = 0;
      }
    } else {
      // Too little hidden to be worth a race: release everything; the
      // cluster settles with every proof in it.
      block_adv = adv_total;
      block_hon = L - adv_total;
      settled_depth = depth_all;
      settled_adv_count = adv_total;
      if (dag) {
        const DagRewards r = dag_block_rewards(tags, has_released);
        block_adv = r.adversary_total;
        block_hon = r.honest_total;
      }
      has_released = false;
      violets = 0;
    }

    rep.adversary_reward += block_adv;
    rep.honest_reward += block_hon;
    ++rep.blocks_settled;
    // Depth-scaled shares in 1/L units stay exact in integers: each settled
    // cluster contributes depth units of reward split by proof count.
    rep.depth_units_adversary += settled_depth * settled_adv_count;
    rep.depth_units_total += settled_depth * L;
    batcher.add(block_adv, block_hon, block);
    if (params.record_trace) {
      rep.trace.emplace_back(a_frac, static_cast<double>(carried) / L);
    }
  }

  const double total = static_cast<double>(rep.adversary_reward + rep.honest_reward);
  rep.relative_reward = total > 0 ? rep.adversary_reward / total : 0.0;
  rep.stderr_estimate = batcher.stderr_estimate();
  return rep;
}

inline SimReport simulate_attack(const AttackParams& params) {
  switch (params.style) {
    case AttackStyle::honest: return simulate_honest(params);
    case AttackStyle::bobtail: return simulate_bobtail(params);
    case AttackStyle::tree:
    case AttackStyle::dag: return simulate_withholding(params);
  }
  throw std::invalid_argument("simulate_attack: unknown style");
}

}  // namespace powlab
