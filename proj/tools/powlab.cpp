// powlab — command-line front end for the parallel proof-of-work laboratory.
//
// Subcommands:
//   bound     safety-violation bound for one cluster size
//   curve     the same bound across a range of cluster sizes
//   attack    Monte Carlo withholding simulations (honest/bobtail/tree/dag)
//   analytic  closed-form quantities (limits, recursions, fee thresholds, ...)
//   mdp       optimal-withholding MDP solves and profitability thresholds
//   sweep     run a config file of parameter grids onto CSV files
//
// Exit codes: 0 success, 2 usage/config error, 3 refusing to overwrite an
// existing output (pass --overwrite), 4 parameter regime not supported
// (e.g. the race success probability is not above one half).

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "powlab/analytic.hpp"
#include "powlab/attacks.hpp"
#include "powlab/config.hpp"
#include "powlab/consistency.hpp"
#include "powlab/csv.hpp"
#include "powlab/mdp.hpp"
#include "powlab/rng.hpp"

namespace {

using namespace powlab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRefuseOverwrite = 3;
constexpr int kExitBadRegime = 4;

// Writes `content` to `path` (stdout when empty). Refuses to clobber an
// existing file unless `overwrite` is set.
int write_output(const std::string& path, bool overwrite, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return kExitOk;
  }
  if (!overwrite && std::filesystem::exists(path)) {
    std::cerr << "powlab: refusing to overwrite '" << path << "' (use --overwrite)\n";
    return kExitRefuseOverwrite;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "powlab: cannot open '" << path << "' for writing\n";
    return kExitUsage;
  }
  out << content;
  return kExitOk;
}

std::uint64_t digest_of(const std::string& canonical) { return fnv1a64(canonical); }

std::string fork_name(Fork f) {
  switch (f) {
    case Fork::irrelevant: return "irrelevant";
    case Fork::relevant: return "relevant";
    case Fork::active: return "active";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// bound / curve
// ---------------------------------------------------------------------------

struct BoundOpts {
  long long L = 50;
  double beta = 0.75;
  double lambda_block = 1.0 / 600.0;
  double delta = 1.0;
  double big_delta = 10.0;
  double epsilon = 1e-12;
  long long L_min = 10, L_max = 100, L_step = 10;  // curve only
  std::string out;
  bool overwrite = false;
};

ConsistencyParams to_params(const BoundOpts& o, long long L) {
  ConsistencyParams p;
  p.L = static_cast<int>(L);
  p.beta = o.beta;
  p.lambda_block = o.lambda_block;
  p.delta = o.delta;
  p.big_delta = o.big_delta;
  p.epsilon = o.epsilon;
  return p;
}

std::string bound_canonical(const BoundOpts& o, bool curve) {
  std::ostringstream s;
  s << (curve ? "curve" : "bound");
  if (curve) {
    s << " L=" << o.L_min << ":" << o.L_max << ":" << o.L_step;
  } else {
    s << " L=" << o.L;
  }
  s << " beta=" << csv_double(o.beta) << " lambda_block=" << csv_double(o.lambda_block)
    << " delta=" << csv_double(o.delta) << " big_delta=" << csv_double(o.big_delta)
    << " epsilon=" << csv_double(o.epsilon);
  return s.str();
}

constexpr const char* kBoundHeader = "L,p,bound,bound_upper,truncation,regime_ok";

std::string bound_row(long long L, const SafetyBound& b) {
  std::ostringstream s;
  s << L << ',' << csv_double(b.p) << ',' << csv_double(b.value) << ','
    << csv_double(b.upper) << ',' << csv_double(b.truncation) << ",1";
  return s.str();
}

int run_bound(const BoundOpts& o) {
  const SafetyBound b = safety_violation_bound(to_params(o, o.L));
  std::ostringstream body;
  CsvWriter w(body);
  w.stamp(RunStamp{0, digest_of(bound_canonical(o, false)), std::string(kToolVersion)});
  w.row({kBoundHeader});
  w.row({bound_row(o.L, b)});
  return write_output(o.out, o.overwrite, body.str());
}

int run_curve(const BoundOpts& o) {
  const std::vector<CurvePoint> pts = consistency_curve(
      to_params(o, o.L_min), static_cast<int>(o.L_min), static_cast<int>(o.L_max),
      static_cast<int>(o.L_step));
  std::ostringstream body;
  CsvWriter w(body);
  w.stamp(RunStamp{0, digest_of(bound_canonical(o, true)), std::string(kToolVersion)});
  w.row({kBoundHeader});
  for (const CurvePoint& pt : pts) {
    std::ostringstream s;
    s << pt.L << ',' << csv_double(pt.p) << ',';
    if (pt.bound) {
      s << csv_double(*pt.bound) << ',' << csv_double(*pt.bound + pt.truncation) << ','
        << csv_double(pt.truncation) << ",1";
    } else {
      s << ",,,0";
    }
    w.row({s.str()});
  }
  return write_output(o.out, o.overwrite, body.str());
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

struct AttackOpts {
  std::string style = "honest";
  double alpha = 0.0;
  long long L = 50;
  long long blocks = 10000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  bool bonus = false;
  std::string out;
  std::string trace_out;
  bool overwrite = false;
};

AttackStyle parse_style(const std::string& s) {
  if (s == "honest") return AttackStyle::honest;
  if (s == "bobtail") return AttackStyle::bobtail;
  if (s == "tree") return AttackStyle::tree;
  if (s == "dag") return AttackStyle::dag;
  throw std::invalid_argument("unknown attack style: " + s);
}

constexpr const char* kAttackHeader =
    "style,alpha,L,blocks,seed,stream,adversary_reward,honest_reward,"
    "relative_reward,stderr,orphaned_honest,orphaned_adversarial,depth_share_adversary";

std::string attack_canonical(const AttackParams& p) {
  std::ostringstream s;
  s << "attack style=" << to_string(p.style) << " alpha=" << csv_double(p.alpha)
    << " L=" << p.L << " blocks=" << p.blocks << " seed=" << p.seed
    << " stream=" << p.stream << " bonus=" << (p.bobtail_bonus_rewards ? 1 : 0);
  return s.str();
}

std::string attack_row(const AttackParams& p, const SimReport& r) {
  std::ostringstream s;
  s << to_string(p.style) << ',' << csv_double(p.alpha) << ',' << p.L << ','
    << p.blocks << ',' << p.seed << ',' << p.stream << ',' << r.adversary_reward
    << ',' << r.honest_reward << ',' << csv_double(r.relative_reward) << ','
    << csv_double(r.stderr_estimate) << ',' << r.orphaned_honest << ','
    << r.orphaned_adversarial << ',';
  if (r.depth_units_total > 0) {
    s << csv_double(static_cast<double>(r.depth_units_adversary) /
                    static_cast<double>(r.depth_units_total));
  }
  return s.str();
}

int run_attack(const AttackOpts& o) {
  AttackParams p;
  p.style = parse_style(o.style);
  p.alpha = o.alpha;
  p.L = static_cast<int>(o.L);
  p.blocks = o.blocks;
  p.seed = o.seed;
  p.stream = o.stream;
  p.bobtail_bonus_rewards = o.bonus;
  p.record_trace = !o.trace_out.empty();
  p.validate();
  const SimReport rep = simulate_attack(p);

  const RunStamp stamp{o.seed, digest_of(attack_canonical(p)), std::string(kToolVersion)};
  std::ostringstream body;
  CsvWriter w(body);
  w.stamp(stamp);
  w.row({kAttackHeader});
  w.row({attack_row(p, rep)});
  const int rc = write_output(o.out, o.overwrite, body.str());
  if (rc != kExitOk) return rc;

  if (!o.trace_out.empty()) {
    std::ostringstream t;
    CsvWriter tw(t);
    tw.stamp(stamp);
    tw.row({"block,advantage_fraction,carried_fraction"});
    for (std::size_t i = 0; i < rep.trace.size(); ++i) {
      std::ostringstream s;
      s << i << ',' << csv_double(rep.trace[i].first) << ','
        << csv_double(rep.trace[i].second);
      tw.row({s.str()});
    }
    return write_output(o.trace_out, o.overwrite, t.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analytic
// ---------------------------------------------------------------------------

struct AnalyticOpts {
  std::string op;
  double alpha = 0.25;
  long long L = 50;
  long long extra = 0;     // trailing completion proofs for h_waste
  long long blocks = 50;   // recursion length
  double r = -1.0;         // leader fee share; -1 = 1/(2L) default
  bool equal_split = false;
  double fee_ratio = 0.85;
  double rho_nakamoto = 0.0;
  double rho_split = 0.0;
  std::string out;
  bool overwrite = false;
};

double leader_share(const AnalyticOpts& o) {
  if (o.equal_split) return equal_split_r(static_cast<int>(o.L));
  if (o.r >= 0.0) return o.r;
  return 1.0 / (2.0 * static_cast<double>(o.L));
}

std::string analytic_canonical(const AnalyticOpts& o) {
  std::ostringstream s;
  s << "analytic op=" << o.op << " alpha=" << csv_double(o.alpha) << " L=" << o.L
    << " extra=" << o.extra << " blocks=" << o.blocks << " r=" << csv_double(leader_share(o))
    << " fee_ratio=" << csv_double(o.fee_ratio) << " rho_nakamoto=" << csv_double(o.rho_nakamoto)
    << " rho_split=" << csv_double(o.rho_split);
  return s.str();
}

struct AnalyticRows {
  std::string header;
  std::vector<std::string> rows;
};

AnalyticRows analytic_rows(const AnalyticOpts& o) {
  AnalyticRows out;
  const int L = static_cast<int>(o.L);
  std::ostringstream s;
  if (o.op == "withhold_limit") {
    out.header = "alpha,L,limit";
    s << csv_double(o.alpha) << ',' << L << ',' << csv_double(withhold_limit(o.alpha, L));
    out.rows.push_back(s.str());
  } else if (o.op == "withhold_recursion") {
    out.header = "n,a,b";
    const auto steps = withhold_recursion(o.alpha, L, o.blocks);
    for (std::size_t n = 0; n < steps.size(); ++n) {
      std::ostringstream row;
      row << (n + 1) << ',' << csv_double(steps[n].a) << ',' << csv_double(steps[n].b);
      out.rows.push_back(row.str());
    }
  } else if (o.op == "dag_rewards") {
    out.header = "alpha,L,adversary_expected,honest_expected,rho,a_fixed,b_fixed";
    const DagRewardSummary d = dag_expected_rewards(o.alpha, L);
    s << csv_double(o.alpha) << ',' << L << ',' << csv_double(d.adversary_expected) << ','
      << csv_double(d.honest_expected) << ',' << csv_double(d.rho) << ','
      << csv_double(d.a_fixed) << ',' << csv_double(d.b_fixed);
    out.rows.push_back(s.str());
  } else if (o.op == "h_waste") {
    out.header = "L,extra,expected,exceeds_two_thirds";
    const HWasteResult h = h_waste_truncated(L, o.extra);
    s << L << ',' << o.extra << ',' << csv_double(h.expected) << ','
      << (h.exceeds_two_thirds ? 1 : 0);
    out.rows.push_back(s.str());
  } else if (o.op == "fee_threshold") {
    out.header = "alpha,L,r,threshold";
    const double r = leader_share(o);
    s << csv_double(o.alpha) << ',' << L << ',' << csv_double(r) << ','
      << csv_double(fee_split_threshold(o.alpha, L, r));
    out.rows.push_back(s.str());
  } else if (o.op == "fee_alpha_bound") {
    out.header = "fee_ratio,L,r,alpha_bound,always_profitable,never_profitable";
    const double r = leader_share(o);
    const FeeAlphaBound b = fee_split_alpha_bound(o.fee_ratio, L, r);
    s << csv_double(o.fee_ratio) << ',' << L << ',' << csv_double(r) << ','
      << csv_double(b.alpha) << ',' << (b.always_profitable ? 1 : 0) << ','
      << (b.never_profitable ? 1 : 0);
    out.rows.push_back(s.str());
  } else if (o.op == "selfish_bound") {
    out.header = "alpha,bound";
    s << csv_double(o.alpha) << ',' << csv_double(selfish_upper_bound(o.alpha));
    out.rows.push_back(s.str());
  } else if (o.op == "weighted_mix") {
    out.header = "rho_nakamoto,rho_split,L,mix";
    s << csv_double(o.rho_nakamoto) << ',' << csv_double(o.rho_split) << ',' << L << ','
      << csv_double(mdp_weighted_mix(o.rho_nakamoto, o.rho_split, L));
    out.rows.push_back(s.str());
  } else {
    throw std::invalid_argument("unknown analytic op: " + o.op);
  }
  return out;
}

int run_analytic(const AnalyticOpts& o) {
  const AnalyticRows rows = analytic_rows(o);
  std::ostringstream body;
  CsvWriter w(body);
  w.stamp(RunStamp{0, digest_of(analytic_canonical(o)), std::string(kToolVersion)});
  w.row({rows.header});
  for (const std::string& r : rows.rows) w.row({r});
  return write_output(o.out, o.overwrite, body.str());
}

// ---------------------------------------------------------------------------
// mdp
// ---------------------------------------------------------------------------

struct MdpOpts {
  std::string model = "nakamoto";
  double alpha = 0.3;
  double gamma = 0.5;
  long long max_fork = 80;
  double rho_tol = 1e-5;
  bool honest = false;
  bool threshold = false;
  double alpha_tol = 1e-3;
  std::string out;
  std::string policy_out;
  bool overwrite = false;
};

MdpModelKind parse_model(const std::string& s) {
  if (s == "nakamoto") return MdpModelKind::nakamoto;
  if (s == "reward_split") return MdpModelKind::reward_split;
  throw std::invalid_argument("unknown mdp model: " + s);
}

std::string mdp_canonical(const MdpOpts& o) {
  std::ostringstream s;
  s << "mdp model=" << o.model << " alpha=" << csv_double(o.alpha)
    << " gamma=" << csv_double(o.gamma) << " max_fork=" << o.max_fork
    << " rho_tol=" << csv_double(o.rho_tol) << " honest=" << (o.honest ? 1 : 0)
    << " threshold=" << (o.threshold ? 1 : 0);
  return s.str();
}

int run_mdp(const MdpOpts& o) {
  const MdpModelKind kind = parse_model(o.model);
  const RunStamp stamp{0, digest_of(mdp_canonical(o)), std::string(kToolVersion)};
  std::ostringstream body;
  CsvWriter w(body);
  w.stamp(stamp);

  if (o.threshold) {
    const double a = mdp_profit_threshold(kind, o.gamma, static_cast<int>(o.max_fork),
                                          o.alpha_tol);
    w.row({"model,gamma,max_fork,alpha_threshold"});
    std::ostringstream s;
    s << o.model << ',' << csv_double(o.gamma) << ',' << o.max_fork << ',' << csv_double(a);
    w.row({s.str()});
    return write_output(o.out, o.overwrite, body.str());
  }

  const MdpModel m = build_mdp_model(kind, o.alpha, o.gamma, static_cast<int>(o.max_fork));
  MdpSolveOptions opt;
  opt.rho_tol = o.rho_tol;
  double rho;
  long long probes = 0, sweeps = 0;
  double residual = 0.0;
  MdpSolveResult solved;
  if (o.honest) {
    rho = mdp_policy_revenue(m, mdp_honest_policy(m), opt);
  } else {
    solved = solve_mdp(m, opt);
    rho = solved.rho;
    probes = solved.probes;
    sweeps = solved.total_sweeps;
    residual = solved.residual_span;
  }
  w.row({"model,alpha,gamma,max_fork,states,rho,probes,sweeps,residual_span"});
  std::ostringstream s;
  s << o.model << ',' << csv_double(o.alpha) << ',' << csv_double(o.gamma) << ','
    << o.max_fork << ',' << m.states.size() << ',' << csv_double(rho) << ',' << probes
    << ',' << sweeps << ',' << csv_double(residual);
  w.row({s.str()});
  const int rc = write_output(o.out, o.overwrite, body.str());
  if (rc != kExitOk) return rc;

  if (!o.policy_out.empty() && !o.honest) {
    std::ostringstream pb;
    CsvWriter pw(pb);
    pw.stamp(stamp);
    pw.row({"a,h,fork,pair,action"});
    for (std::size_t i = 0; i < m.states.size(); ++i) {
      const MdpState& st = m.states[i];
      const MdpActionRow& row = m.actions[st.action_begin + solved.policy[i]];
      std::ostringstream ps;
      ps << st.a << ',' << st.h << ',' << fork_name(st.fork) << ','
         << int(st.pair) << ',' << to_string(row.action);
      pw.row({ps.str()});
    }
    return write_output(o.policy_out, o.overwrite, pb.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOpts {
  std::string config_path;
  std::string out_dir = ".";
  long long workers = 0;  // 0 = hardware concurrency
  bool overwrite = false;
  std::vector<std::string> sets;  // section.key=value or key=value
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
};

std::uint64_t section_digest(const ConfigSection& sec) {
  std::string canon = "[" + sec.name() + "]\n";
  for (const auto& kv : sec.entries()) canon += kv.first + "=" + kv.second + "\n";
  return fnv1a64(canon);
}

struct SweepJob {
  std::size_t output_index;
  std::function<std::vector<std::string>()> run;  // produces CSV rows
  std::vector<std::string> rows;
  std::string error;
  bool regime_error = false;
};

struct SweepOutputFile {
  std::string path;
  RunStamp stamp;
  std::string header;
  std::vector<std::size_t> jobs;  // indices into the global job list, in order
};

void expand_section(const ConfigSection& sec, const SweepOpts& so,
                    std::vector<SweepJob>& jobs, std::vector<SweepOutputFile>& outputs) {
  const std::string kind = sec.get("kind");
  const std::uint64_t seed =
      so.has_seed_override ? so.seed_override
                           : static_cast<std::uint64_t>(sec.as_int_or("seed", 1));

  SweepOutputFile out;
  out.path = (std::filesystem::path(so.out_dir) / sec.get("out")).string();
  out.stamp = RunStamp{seed, section_digest(sec), std::string(kToolVersion)};

  const auto add_job = [&](std::function<std::vector<std::string>()> fn) {
    SweepJob j;
    j.output_index = outputs.size();
    j.run = std::move(fn);
    out.jobs.push_back(jobs.size());
    jobs.push_back(std::move(j));
  };

  if (kind == "attack") {
    sec.require_known_keys({"kind", "style", "alpha", "L", "blocks", "seed", "bonus", "out"});
    const AttackStyle style = parse_style(sec.get("style"));
    const std::vector<double> alphas = parse_grid(sec.get("alpha"));
    const std::vector<long long> Ls = parse_int_grid(sec.get_or("L", "50"));
    const long long blocks = sec.as_int_or("blocks", 10000);
    const bool bonus = sec.as_bool_or("bonus", false);
    out.header = kAttackHeader;
    std::uint64_t stream = 0;
    for (long long L : Ls) {
      for (double alpha : alphas) {
        AttackParams p;
        p.style = style;
        p.alpha = alpha;
        p.L = static_cast<int>(L);
        p.blocks = blocks;
        p.seed = seed;
        p.stream = stream++;
        p.bobtail_bonus_rewards = bonus;
        p.validate();  // reject bad parameters before any job runs
        add_job([p] { return std::vector<std::string>{attack_row(p, simulate_attack(p))}; });
      }
    }
  } else if (kind == "bound" || kind == "curve") {
    sec.require_known_keys(
        {"kind", "L", "beta", "lambda_block", "delta", "big_delta", "epsilon", "out"});
    BoundOpts bo;
    bo.beta = sec.as_double_or("beta", 0.75);
    bo.lambda_block = sec.as_double_or("lambda_block", 1.0 / 600.0);
    bo.delta = sec.as_double_or("delta", 1.0);
    bo.big_delta = sec.as_double_or("big_delta", 10.0);
    bo.epsilon = sec.as_double_or("epsilon", 1e-12);
    const std::vector<long long> Ls = parse_int_grid(sec.get("L"));
    out.header = kBoundHeader;
    for (long long L : Ls) {
      const ConsistencyParams cp = to_params(bo, L);
      cp.validate();
      if (kind == "bound") {
        add_job([cp, L] {
          return std::vector<std::string>{bound_row(L, safety_violation_bound(cp))};
        });
      } else {
        add_job([cp, L]() -> std::vector<std::string> {
          ConsistencyParams local = cp;
          std::ostringstream s;
          s << L << ',' << csv_double(local.race_p()) << ',';
          if (local.race_p() > 0.5) {
            const SafetyBound b = safety_violation_bound(local);
            s << csv_double(b.value) << ',' << csv_double(b.upper) << ','
              << csv_double(b.truncation) << ",1";
          } else {
            s << ",,,0";
          }
          return {s.str()};
        });
      }
    }
  } else if (kind == "analytic") {
    sec.require_known_keys({"kind", "op", "alpha", "L", "extra", "blocks", "r",
                            "equal_split", "fee_ratio", "rho_nakamoto", "rho_split", "out"});
    AnalyticOpts ao;
    ao.op = sec.get("op");
    ao.extra = sec.as_int_or("extra", 0);
    ao.blocks = sec.as_int_or("blocks", 50);
    ao.equal_split = sec.as_bool_or("equal_split", false);
    ao.r = sec.as_double_or("r", -1.0);
    ao.fee_ratio = sec.as_double_or("fee_ratio", 0.85);
    ao.rho_nakamoto = sec.as_double_or("rho_nakamoto", 0.0);
    ao.rho_split = sec.as_double_or("rho_split", 0.0);
    const std::vector<double> alphas =
        sec.has("alpha") ? parse_grid(sec.get("alpha")) : std::vector<double>{0.25};
    const std::vector<long long> Ls =
        sec.has("L") ? parse_int_grid(sec.get("L")) : std::vector<long long>{50};
    {
      AnalyticOpts probe = ao;  // header is grid-independent
      probe.alpha = alphas.front();
      probe.L = Ls.front();
      out.header = analytic_rows(probe).header;
    }
    for (long long L : Ls) {
      for (double alpha : alphas) {
        AnalyticOpts point = ao;
        point.alpha = alpha;
        point.L = L;
        add_job([point] { return analytic_rows(point).rows; });
      }
    }
  } else if (kind == "mdp") {
    sec.require_known_keys({"kind", "model", "alpha", "gamma", "max_fork", "rho_tol",
                            "honest", "threshold", "alpha_tol", "out"});
    MdpOpts mo;
    mo.model = sec.get("model");
    mo.max_fork = sec.as_int_or("max_fork", 80);
    mo.rho_tol = sec.as_double_or("rho_tol", 1e-5);
    mo.honest = sec.as_bool_or("honest", false);
    mo.threshold = sec.as_bool_or("threshold", false);
    mo.alpha_tol = sec.as_double_or("alpha_tol", 1e-3);
    const MdpModelKind kindm = parse_model(mo.model);
    const std::vector<double> gammas =
        sec.has("gamma") ? parse_grid(sec.get("gamma")) : std::vector<double>{0.5};
    if (mo.threshold) {
      out.header = "model,gamma,max_fork,alpha_threshold";
      for (double gamma : gammas) {
        add_job([mo, kindm, gamma] {
          const double a = mdp_profit_threshold(kindm, gamma,
                                                static_cast<int>(mo.max_fork), mo.alpha_tol);
          std::ostringstream s;
          s << mo.model << ',' << csv_double(gamma) << ',' << mo.max_fork << ','
            << csv_double(a);
          return std::vector<std::string>{s.str()};
        });
      }
    } else {
      const std::vector<double> alphas = parse_grid(sec.get("alpha"));
      out.header = "model,alpha,gamma,max_fork,states,rho,probes,sweeps,residual_span";
      for (double gamma : gammas) {
        for (double alpha : alphas) {
          add_job([mo, kindm, gamma, alpha] {
            const MdpModel m =
                build_mdp_model(kindm, alpha, gamma, static_cast<int>(mo.max_fork));
            MdpSolveOptions opt;
            opt.rho_tol = mo.rho_tol;
            double rho;
            long long probes = 0, sweeps = 0;
            double residual = 0.0;
            if (mo.honest) {
              rho = mdp_policy_revenue(m, mdp_honest_policy(m), opt);
            } else {
              const MdpSolveResult r = solve_mdp(m, opt);
              rho = r.rho;
              probes = r.probes;
              sweeps = r.total_sweeps;
              residual = r.residual_span;
            }
            std::ostringstream s;
            s << mo.model << ',' << csv_double(alpha) << ',' << csv_double(gamma) << ','
              << mo.max_fork << ',' << m.states.size() << ',' << csv_double(rho) << ','
              << probes << ',' << sweeps << ',' << csv_double(residual);
            return std::vector<std::string>{s.str()};
          });
        }
      }
    }
  } else {
    throw ConfigError("[" + sec.name() + "] unknown kind '" + kind + "'");
  }
  outputs.push_back(std::move(out));
}

int run_sweep(const SweepOpts& so) {
  Config cfg = Config::parse_file(so.config_path);
  if (cfg.sections().empty()) {
    throw ConfigError("config has no [sections]: " + so.config_path);
  }

  // CLI overrides: "--set section.key=value" or "--set key=value" (all).
  for (const std::string& s : so.sets) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + s);
    std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    std::string section;
    const std::size_t dot = key.find('.');
    if (dot != std::string::npos) {
      section = key.substr(0, dot);
      key = key.substr(dot + 1);
    }
    bool applied = false;
    for (ConfigSection& sec : cfg.sections()) {
      if (section.empty() || sec.name() == section) {
        sec.set(key, value);
        applied = true;
      }
    }
    if (!applied) throw ConfigError("--set: no section named '" + section + "'");
  }

  std::vector<SweepJob> jobs;
  std::vector<SweepOutputFile> outputs;
  for (const ConfigSection& sec : cfg.sections()) {
    expand_section(sec, so, jobs, outputs);
  }

  // Check every output target before spending any compute.
  for (const SweepOutputFile& out : outputs) {
    if (!so.overwrite && std::filesystem::exists(out.path)) {
      std::cerr << "powlab: refusing to overwrite '" << out.path << "' (use --overwrite)\n";
      return kExitRefuseOverwrite;
    }
  }

  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t workers = so.workers > 0 ? static_cast<std::size_t>(so.workers)
                                             : std::max(1u, hw ? hw : 1u);
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i].rows = jobs[i].run();
      } catch (const std::domain_error& e) {
        jobs[i].error = e.what();
        jobs[i].regime_error = true;
      } catch (const std::exception& e) {
        jobs[i].error = e.what();
      }
    }
  };
  if (workers <= 1 || jobs.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(workers, jobs.size()); ++t) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) t.join();
  }

  for (const SweepJob& j : jobs) {
    if (!j.error.empty()) {
      std::cerr << "powlab: sweep job failed: " << j.error << "\n";
      return j.regime_error ? kExitBadRegime : kExitUsage;
    }
  }

  for (const SweepOutputFile& out : outputs) {
    std::ostringstream body;
    CsvWriter w(body);
    w.stamp(out.stamp);
    w.row({out.header});
    for (std::size_t ji : out.jobs) {
      for (const std::string& r : jobs[ji].rows) w.row({r});
    }
    std::filesystem::create_directories(std::filesystem::path(out.path).parent_path());
    const int rc = write_output(out.path, so.overwrite, body.str());
    if (rc != kExitOk) return rc;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"powlab: a laboratory for parallel proof-of-work consensus"};
  app.set_version_flag("--version", std::string(powlab::kToolVersion));
  app.require_subcommand(1);

  BoundOpts bo;
  CLI::App* bound = app.add_subcommand("bound", "Safety-violation bound for one cluster size");
  bound->add_option("--L", bo.L, "proofs per cluster");
  bound->add_option("--beta", bo.beta, "honest fraction of mining power");
  bound->add_option("--lambda-block", bo.lambda_block, "block rate (1/s)");
  bound->add_option("--delta", bo.delta, "proof propagation delay (s)");
  bound->add_option("--big-delta", bo.big_delta, "cluster propagation delay (s)");
  bound->add_option("--epsilon", bo.epsilon, "distribution tail cutoff");
  bound->add_option("--out", bo.out, "output CSV (default stdout)");
  bound->add_flag("--overwrite", bo.overwrite, "allow clobbering --out");

  BoundOpts co;
  CLI::App* curve = app.add_subcommand("curve", "Safety bound across cluster sizes");
  curve->add_option("--L-min", co.L_min, "first cluster size");
  curve->add_option("--L-max", co.L_max, "last cluster size");
  curve->add_option("--L-step", co.L_step, "cluster size step");
  curve->add_option("--beta", co.beta, "honest fraction of mining power");
  curve->add_option("--lambda-block", co.lambda_block, "block rate (1/s)");
  curve->add_option("--delta", co.delta, "proof propagation delay (s)");
  curve->add_option("--big-delta", co.big_delta, "cluster propagation delay (s)");
  curve->add_option("--epsilon", co.epsilon, "distribution tail cutoff");
  curve->add_option("--out", co.out, "output CSV (default stdout)");
  curve->add_flag("--overwrite", co.overwrite, "allow clobbering --out");

  AttackOpts ao;
  CLI::App* attack = app.add_subcommand("attack", "Monte Carlo withholding simulation");
  attack->add_option("--style", ao.style, "honest, bobtail, tree, or dag")
      ->check(CLI::IsMember({"honest", "bobtail", "tree", "dag"}));
  attack->add_option("--alpha", ao.alpha, "adversarial mining share")->required();
  attack->add_option("--L", ao.L, "proofs per cluster");
  attack->add_option("--blocks", ao.blocks, "settled clusters to simulate");
  attack->add_option("--seed", ao.seed, "random seed");
  attack->add_option("--stream", ao.stream, "random substream");
  attack->add_flag("--bonus", ao.bonus, "include support-bonus rewards (bobtail)");
  attack->add_option("--out", ao.out, "output CSV (default stdout)");
  attack->add_option("--trace-out", ao.trace_out, "per-cluster trace CSV");
  attack->add_flag("--overwrite", ao.overwrite, "allow clobbering outputs");

  AnalyticOpts no;
  CLI::App* analytic = app.add_subcommand("analytic", "Closed-form quantities");
  analytic->add_option("--op", no.op, "operation")
      ->required()
      ->check(CLI::IsMember({"withhold_limit", "withhold_recursion", "dag_rewards",
                             "h_waste", "fee_threshold", "fee_alpha_bound",
                             "selfish_bound", "weighted_mix"}));
  analytic->add_option("--alpha", no.alpha, "adversarial mining share");
  analytic->add_option("--L", no.L, "proofs per cluster");
  analytic->add_option("--extra", no.extra, "trailing completion proofs (h_waste)");
  analytic->add_option("--blocks", no.blocks, "recursion length");
  analytic->add_option("--r", no.r, "leader fee share (default 1/(2L))");
  analytic->add_flag("--equal-split", no.equal_split, "use r = 1/(L+1)");
  analytic->add_option("--fee-ratio", no.fee_ratio, "per-cluster fee ratio (alpha bound)");
  analytic->add_option("--rho-nakamoto", no.rho_nakamoto, "chain revenue (weighted_mix)");
  analytic->add_option("--rho-split", no.rho_split, "split revenue (weighted_mix)");
  analytic->add_option("--out", no.out, "output CSV (default stdout)");
  analytic->add_flag("--overwrite", no.overwrite, "allow clobbering --out");

  MdpOpts mo;
  CLI::App* mdp = app.add_subcommand("mdp", "Optimal-withholding MDP");
  mdp->add_option("--model", mo.model, "nakamoto or reward_split")
      ->check(CLI::IsMember({"nakamoto", "reward_split"}));
  mdp->add_option("--alpha", mo.alpha, "adversarial mining share");
  mdp->add_option("--gamma", mo.gamma, "honest power mining on a matched copy");
  mdp->add_option("--max-fork", mo.max_fork, "fork length truncation");
  mdp->add_option("--rho-tol", mo.rho_tol, "bisection width on rho");
  mdp->add_flag("--honest", mo.honest, "evaluate the honest policy instead");
  mdp->add_flag("--threshold", mo.threshold, "find the smallest profitable alpha");
  mdp->add_option("--alpha-tol", mo.alpha_tol, "threshold bisection width");
  mdp->add_option("--out", mo.out, "output CSV (default stdout)");
  mdp->add_option("--policy-out", mo.policy_out, "optimal policy CSV");
  mdp->add_flag("--overwrite", mo.overwrite, "allow clobbering outputs");

  SweepOpts so;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a config file of parameter grids");
  sweep->add_option("--config", so.config_path, "INI-style sweep recipe")->required();
  sweep->add_option("--out-dir", so.out_dir, "directory for output CSVs");
  sweep->add_option("--workers", so.workers, "worker threads (0 = hardware)");
  sweep->add_flag("--overwrite", so.overwrite, "allow clobbering outputs");
  sweep->add_option("--set", so.sets, "override config values (section.key=value)");
  CLI::Option* seed_opt = sweep->add_option("--seed", so.seed_override, "override every section's seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  so.has_seed_override = seed_opt->count() > 0;

  try {
    if (*bound) return run_bound(bo);
    if (*curve) return run_curve(co);
    if (*attack) return run_attack(ao);
    if (*analytic) return run_analytic(no);
    if (*mdp) return run_mdp(mo);
    if (*sweep) return run_sweep(so);
  } catch (const powlab::ConfigError& e) {
    std::cerr << "powlab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "powlab: " << e.what() << "\n";
    return kExitBadRegime;
  } catch (const std::invalid_argument& e) {
    std::cerr << "powlab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "powlab: internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
