#pragma once

// Core objects of the parallel proof-of-work voting protocol: proofs grouped
// into clusters of L (or L+1) with at most two parallel proofs per proof
// height, heaviest-aggregate-work fork choice, fee-based ledger election,
// and exact (rational) reward distribution.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/rational.hpp>

namespace powlab {

using ProofId = std::uint64_t;
using Rational = boost::rational<long long>;

enum class ProofKind { initiator, incremental };

struct ProofOwner {
  bool adversarial = false;
  std::uint32_t node = 0;  // honest node index; ignored for adversarial owners

  friend bool operator==(const ProofOwner&, const ProofOwner&) = default;
};

struct Proof {
  ProofId id = 0;
  ProofKind kind = ProofKind::incremental;
  int incremental_height = 1;                  // intra-cluster work this proof attests
  std::vector<ProofId> parents;                // 1-2 parallel parents; empty for initiators
  std::vector<ProofId> prev_block_summary;     // initiators: the L proofs of the previous cluster
  std::uint64_t elected_ledger_ref = 0;        // initiators: commit of the elected ledger
  long long fee_offer = 0;                     // fee its own ledger offers for the next election
  std::uint64_t ledger_commit = 0;             // digest of the ledger this proof proposes
  std::uint64_t reward_address = 0;
  ProofOwner owner;
};

struct BlockCluster {
  int L = 0;                       // vote threshold the cluster must meet
  std::vector<Proof> proofs;       // size L or L+1
  std::uint64_t elected_ledger = 0;
  int total_proof_height = 0;      // number of proof heights (C)
};

struct RewardAllocation {
  std::map<ProofId, Rational> coinbase_shares;  // in block-reward units; sums to C
  std::map<ProofId, Rational> fee_shares;       // voter fee payouts
  Rational leader_fee = Rational(0);            // elected ledger creator's cut
};

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string msg) {
    ok = false;
    violations.push_back(std::move(msg));
  }
};

namespace detail {

inline std::vector<ProofId> sorted_ids(std::vector<ProofId> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace detail

// Proof height within a cluster: initiators sit at height 1, every other
// proof one above its parents. Parallel proofs share a height, so a proof
// combining two initiators has proof height 2 even though it attests
// incremental work 3.
inline int proof_height(const BlockCluster& cluster, ProofId id) {
  std::unordered_map<ProofId, const Proof*> by_id;
  for (const Proof& pr : cluster.proofs) by_id.emplace(pr.id, &pr);
  std::unordered_map<ProofId, int> memo;
  // Iterate to a fixed point instead of recursing: clusters are tiny and the
  // parent relation is acyclic, so |proofs| passes suffice.
  for (std::size_t pass = 0; pass <= cluster.proofs.size(); ++pass) {
    bool progressed = false;
    for (const Proof& pr : cluster.proofs) {
      if (memo.count(pr.id)) continue;
      if (pr.kind == ProofKind::initiator) {
        memo[pr.id] = 1;
        progressed = true;
        continue;
      }
      bool ready = !pr.parents.empty();
      int h = 0;
      for (ProofId parent : pr.parents) {
        auto it = memo.find(parent);
        if (it == memo.end()) {
          ready = false;
          break;
        }
        h = std::max(h, it->second);
      }
      if (ready) {
        memo[pr.id] = h + 1;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  auto it = memo.find(id);
  if (it == memo.end()) {
    throw std::invalid_argument("proof_height: proof not reachable from cluster initiators");
  }
  return it->second;
}

// A chain view spans clusters: initiators link to the previous cluster via
// their summary, incremental proofs via their parents.
struct ChainView {
  std::unordered_map<ProofId, Proof> proofs;
  std::vector<ProofId> tips;

  const Proof& at(ProofId id) const {
    auto it = proofs.find(id);
    if (it == proofs.end()) throw std::invalid_argument("chain view: unknown proof id");
    return it->second;
  }
};

// True when two distinct proofs occupy the same slot and agree on
// everything a child must combine: identical parent sets for incremental
// proofs, identical summary and ledger election for initiators.
inline bool parallel_compatible(const Proof& a, const Proof& b) {
  if (a.id == b.id || a.kind != b.kind) return false;
  if (a.incremental_height != b.incremental_height) return false;
  if (a.kind == ProofKind::initiator) {
    return detail::sorted_ids(a.prev_block_summary) == detail::sorted_ids(b.prev_block_summary) &&
           a.elected_ledger_ref == b.elected_ledger_ref;
  }
  return detail::sorted_ids(a.parents) == detail::sorted_ids(b.parents);
}

// Aggregate work carried by a proof: all distinct ancestors (across
// clusters) plus itself, plus one unit when a compatible parallel proof is
// present in the view — a pair at one height is two units of work even
// though it occupies a single height.
inline int aggregate_work(const ChainView& view, ProofId id) {
  const Proof& start = view.at(id);
  std::unordered_set<ProofId> seen;
  std::vector<ProofId> stack{id};
  seen.insert(id);
  while (!stack.empty()) {
    const Proof& pr = view.at(stack.back());
    stack.pop_back();
    const auto& links = pr.kind == ProofKind::initiator ? pr.prev_block_summary : pr.parents;
    for (ProofId parent : links) {
      if (seen.insert(parent).second) stack.push_back(parent);
    }
  }
  int work = static_cast<int>(seen.size());
  for (const auto& [other_id, other] : view.proofs) {
    if (!seen.count(other_id) && parallel_compatible(start, other)) {
      ++work;
      break;  // at most one parallel peer can share the slot
    }
  }
  return work;
}

// Heaviest-work tip. Equal-weight ties resolve for the adversary first (the
// bound analysis assumes the worst), then by lowest id for determinism.
inline ProofId fork_choice(const ChainView& view) {
  if (view.tips.empty()) throw std::invalid_argument("fork_choice: no tips");
  std::optional<ProofId> best;
  int best_work = -1;
  bool best_adv = false;
  for (ProofId tip : view.tips) {
    const int work = aggregate_work(view, tip);
    const bool adv = view.at(tip).owner.adversarial;
    bool take = false;
    if (!best) {
      take = true;
    } else if (work != best_work) {
      take = work > best_work;
    } else if (adv != best_adv) {
      take = adv;
    } else {
      take = tip < *best;
    }
    if (take) {
      best = tip;
      best_work = work;
      best_adv = adv;
    }
  }
  return *best;
}

struct LedgerElection {
  std::uint64_t ledger_commit = 0;
  long long fee_offer = 0;
  ProofId proposer = 0;
};

// Election for the next cluster: consider the previous cluster's proofs in
// descending fee order (the grace-period retry), skipping offers whose
// ledger was never shared; a withheld ledger is worth nothing. Ties on the
// offer break toward the lower ledger commit. Returns nothing when no
// proposed ledger is available, which callers must treat as an election
// failure.
inline std::optional<LedgerElection> elect_ledger(const BlockCluster& prev,
                                                  const std::set<std::uint64_t>& shared_ledgers) {
  std::optional<LedgerElection> winner;
  for (const Proof& pr : prev.proofs) {
    if (!shared_ledgers.count(pr.ledger_commit)) continue;
    const bool better =
        !winner || pr.fee_offer > winner->fee_offer ||
        (pr.fee_offer == winner->fee_offer && pr.ledger_commit < winner->ledger_commit);
    if (better) winner = LedgerElection{pr.ledger_commit, pr.fee_offer, pr.id};
  }
  return winner;
}

// Worst-case ledger bytes a voter must relay for a cluster of C heights
// when one ledger serves M heights and each ledger is at most B bytes.
inline std::uint64_t max_ledger_bytes(int total_proof_height, int heights_per_ledger,
                                      std::uint64_t bytes_per_ledger) {
  if (total_proof_height < 0 || heights_per_ledger < 1) {
    throw std::invalid_argument("max_ledger_bytes: bad heights");
  }
  const std::uint64_t ledgers =
      (static_cast<std::uint64_t>(total_proof_height) + heights_per_ledger - 1) /
      static_cast<std::uint64_t>(heights_per_ledger);
  return ledgers * bytes_per_ledger;
}

// Structural validation of one cluster against the protocol rules. Collects
// every violation rather than stopping at the first.
inline ValidationResult validate_cluster(const BlockCluster& cluster) {
  ValidationResult res;
  const std::size_t n = cluster.proofs.size();
  if (cluster.L < 1) {
    res.fail("cluster: L must be >= 1");
    return res;
  }
  if (n != static_cast<std::size_t>(cluster.L) && n != static_cast<std::size_t>(cluster.L) + 1) {
    res.fail("cluster: size must be L or L+1");
  }
  if (n < static_cast<std::size_t>(cluster.L)) {
    res.fail("cluster: aggregate vote count below threshold L");
  }

  std::unordered_map<ProofId, const Proof*> by_id;
  for (const Proof& pr : cluster.proofs) {
    if (!by_id.emplace(pr.id, &pr).second) res.fail("cluster: duplicate proof id");
  }
  if (!res.ok) return res;

  // Per-proof structural rules.
  for (const Proof& pr : cluster.proofs) {
    if (pr.kind == ProofKind::initiator) {
      if (pr.incremental_height != 1) res.fail("initiator: incremental height must be 1");
      if (!pr.parents.empty()) res.fail("initiator: must not carry intra-cluster parents");
      if (pr.prev_block_summary.size() != static_cast<std::size_t>(cluster.L)) {
        res.fail("initiator: previous-cluster summary must list L proofs");
      }
    } else {
      if (pr.parents.empty() || pr.parents.size() > 2) {
        res.fail("incremental: must reference one or two parents");
        continue;
      }
      for (ProofId parent : pr.parents) {
        if (!by_id.count(parent)) res.fail("incremental: parent not in cluster");
      }
    }
  }
  if (!res.ok) return res;

  // Heights, pairing, and incremental-work consistency.
  std::unordered_map<ProofId, int> height;
  std::map<int, std::vector<const Proof*>> by_height;
  try {
    for (const Proof& pr : cluster.proofs) {
      height[pr.id] = proof_height(cluster, pr.id);
      by_height[height[pr.id]].push_back(&pr);
    }
  } catch (const std::invalid_argument& e) {
    res.fail(e.what());
    return res;
  }

  for (const Proof& pr : cluster.proofs) {
    if (pr.kind != ProofKind::incremental) continue;
    const Proof& first_parent = *by_id.at(pr.parents[0]);
    int parent_count = static_cast<int>(pr.parents.size());
    if (pr.parents.size() == 2) {
      const Proof& second_parent = *by_id.at(pr.parents[1]);
      if (!parallel_compatible(first_parent, second_parent)) {
        res.fail("incremental: two parents must be compatible parallel proofs");
      }
    }
    for (ProofId parent : pr.parents) {
      if (height.at(parent) != height.at(pr.parents[0])) {
        res.fail("incremental: parents must share a proof height");
      }
    }
    const int expected = by_id.at(pr.parents[0])->incremental_height + parent_count;
    if (pr.incremental_height != expected) {
      res.fail("incremental: height must extend parents by the number of parents");
    }
  }

  const int C = by_height.empty() ? 0 : by_height.rbegin()->first;
  for (int h = 1; h <= C; ++h) {
    auto it = by_height.find(h);
    if (it == by_height.end()) {
      res.fail("cluster: proof heights must be contiguous");
      continue;
    }
    const auto& level = it->second;
    if (level.size() > 2) {
      res.fail("cluster: more than two parallel proofs at one height");
    } else if (level.size() == 2 && !parallel_compatible(*level[0], *level[1])) {
      res.fail("cluster: parallel proofs at one height must be combinable");
    }
  }
  if (cluster.total_proof_height != C) {
    res.fail("cluster: recorded total proof height disagrees with the DAG");
  }
  return res;
}

// Coinbase and fee distribution for a settled cluster. Each proof height is
// worth exactly one block-reward unit, halved across a parallel pair, so
// coinbase shares sum to C. The elected-ledger creator takes r of the fees;
// the remaining (1-r) follows the coinbase pattern. All arithmetic is exact.
inline RewardAllocation distribute_rewards(const BlockCluster& cluster, long long total_fees,
                                           const Rational& leader_r) {
  if (total_fees < 0) throw std::invalid_argument("distribute_rewards: negative fees");
  if (leader_r < Rational(0) || leader_r > Rational(1)) {
    throw std::invalid_argument("distribute_rewards: leader share must be in [0, 1]");
  }
  ValidationResult vres = validate_cluster(cluster);
  if (!vres.ok) {
    throw std::invalid_argument("distribute_rewards: invalid cluster: " + vres.violations.front());
  }

  std::map<int, std::vector<ProofId>> by_height;
  for (const Proof& pr : cluster.proofs) {
    by_height[proof_height(cluster, pr.id)].push_back(pr.id);
  }
  const int C = static_cast<int>(by_height.size());

  RewardAllocation alloc;
  alloc.leader_fee = leader_r * Rational(total_fees);
  const Rational voter_fees = (Rational(1) - leader_r) * Rational(total_fees);
  for (const auto& [h, ids] : by_height) {
    const Rational unit_share = Rational(1, static_cast<long long>(ids.size()));
    const Rational fee_share = voter_fees / Rational(C) / Rational(static_cast<long long>(ids.size()));
    for (ProofId id : ids) {
      alloc.coinbase_shares[id] = unit_share;
      alloc.fee_shares[id] = fee_share;
    }
  }
  return alloc;
}

}  // namespace powlab
