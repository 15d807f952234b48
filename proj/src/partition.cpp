#include "covclust/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "covclust/errors.hpp"
#include "covclust/param_samplers.hpp"

namespace covclust {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxSliceRounds = 10000;

std::vector<int> with_member(std::span<const int> members, int m) {
  std::vector<int> out(members.begin(), members.end());
  out.insert(std::lower_bound(out.begin(), out.end(), m), m);
  return out;
}

std::vector<int> without_member(std::span<const int> members, int m) {
  std::vector<int> out;
  out.reserve(members.size());
  for (int x : members) {
    if (x != m) out.push_back(x);
  }
  return out;
}

void insert_sorted(std::vector<int>& v, int m) { v.insert(std::lower_bound(v.begin(), v.end(), m), m); }

void erase_value(std::vector<int>& v, int m) { v.erase(std::find(v.begin(), v.end(), m)); }

// log(exp(a) / (exp(a) + exp(b)))
double log_share(double a, double b) {
  if (a == kNegInf) return kNegInf;
  const double hi = std::max(a, b);
  return a - (hi + std::log(std::exp(a - hi) + std::exp(b - hi)));
}

double log_inv_gamma_density(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

}  // namespace

double block_ll(const LikelihoodContext& ctx, const ClusterCovParams& cov,
                std::span<const int> members, int label) {
  if (members.empty()) return 0.0;
  const auto j = static_cast<std::size_t>(label);
  const double rho = members.size() == 1 ? 0.0 : cov.rho[j];
  return block_log_likelihood(ctx.corr.block_terms(members, rho, ctx.a_full), cov.sigma2[j], ctx.n);
}

ZCache::ZCache(const LikelihoodContext& ctx, ChainState& state)
    : ctx_(ctx), state_(state), members_(state.assignment.members()), log_w_(state.sticks.log_weights()) {
  ll_.resize(members_.size());
  for (std::size_t j = 0; j < members_.size(); ++j) {
    ll_[j] = block_ll(ctx_, state_.cov, members_[j], static_cast<int>(j));
  }
}

double ZCache::log_conditional(int m, int j) const {
  const int c = state_.assignment[m];
  const auto jj = static_cast<std::size_t>(j);
  if (j == c) return log_w_[jj] - log_w_[static_cast<std::size_t>(c)];
  const auto cc = static_cast<std::size_t>(c);
  const double from = block_ll(ctx_, state_.cov, without_member(members_[cc], m), c);
  const double to = block_ll(ctx_, state_.cov, with_member(members_[jj], m), j);
  return log_w_[jj] - log_w_[cc] + from + to - ll_[cc] - ll_[jj];
}

void ZCache::move(int m, int to) {
  const int from = state_.assignment[m];
  if (from == to) return;
  const auto f = static_cast<std::size_t>(from), t = static_cast<std::size_t>(to);
  erase_value(members_[f], m);
  insert_sorted(members_[t], m);
  ll_[f] = block_ll(ctx_, state_.cov, members_[f], from);
  ll_[t] = block_ll(ctx_, state_.cov, members_[t], to);
  state_.assignment.set(m, to);
}

double z_log_conditional(int m, int j, const ChainState& state, const LikelihoodContext& ctx) {
  const auto log_w = state.sticks.log_weights();
  const int c = state.assignment[m];
  if (j == c) return log_w[static_cast<std::size_t>(j)];
  const auto members = state.assignment.members();
  const auto& sc = members[static_cast<std::size_t>(c)];
  const auto& sj = members[static_cast<std::size_t>(j)];
  const double delta = block_ll(ctx, state.cov, without_member(sc, m), c) +
                       block_ll(ctx, state.cov, with_member(sj, m), j) -
                       block_ll(ctx, state.cov, sc, c) - block_ll(ctx, state.cov, sj, j);
  return log_w[static_cast<std::size_t>(j)] + delta;
}

int walker_slice_z(int m, ZCache& cache, int step, Rng& rng) {
  if (step < 1) throw DomainError("Walker step size must be at least 1");
  const int k = cache.max_clusters();
  const int z0 = cache.state().assignment[m];
  if (k == 1) return z0;

  // Auxiliary-variable form: l | z uniform on {z..min(z+s-1, K-1)}, so the
  // slice is taken under p(z) / n(z) with n(z) the size of that range.
  auto range_size = [&](int z) { return std::min(z + step - 1, k - 1) - z + 1; };
  std::map<int, double> memo;
  auto target = [&](int z) {
    auto it = memo.find(z);
    if (it != memo.end()) return it->second;
    const double v = cache.log_conditional(m, z) - std::log(static_cast<double>(range_size(z)));
    memo.emplace(z, v);
    return v;
  };

  const double log_omega = target(z0) + std::log(rng.uniform());
  const int ell = rng.uniform_int(z0, std::min(z0 + step - 1, k - 1));
  int a = std::max(0, ell - step + 1);
  int b = ell;
  for (int round = 0; round < kMaxSliceRounds; ++round) {
    const int z = rng.uniform_int(a, b);
    if (target(z) > log_omega) {
      cache.move(m, z);
      return z;
    }
    if (z < z0) {
      a = z + 1;
    } else {
      b = z - 1;
    }
  }
  throw NumericalError("label slice sampler exceeded the shrinkage cap");
}

int gibbs_z(int m, ZCache& cache, Rng& rng) {
  const int k = cache.max_clusters();
  std::vector<double> lp(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) lp[static_cast<std::size_t>(j)] = cache.log_conditional(m, j);
  const int z = static_cast<int>(rng.categorical_log(lp));
  cache.move(m, z);
  return z;
}

void walker_sweep(ChainState& state, const LikelihoodContext& ctx, int step, Rng& rng) {
  ZCache cache(ctx, state);
  for (int m = 0; m < state.assignment.size(); ++m) walker_slice_z(m, cache, step, rng);
}

void gibbs_sweep(ChainState& state, const LikelihoodContext& ctx, Rng& rng) {
  ZCache cache(ctx, state);
  for (int m = 0; m < state.assignment.size(); ++m) gibbs_z(m, cache, rng);
}

std::vector<std::pair<int, double>> build_split_weights(const ClusterAssignment& assignment,
                                                        SplitMode mode, const HyperParams& hyper) {
  const auto counts = assignment.counts();
  std::vector<int> multi;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] > 1) multi.push_back(static_cast<int>(j));
  }
  std::stable_sort(multi.begin(), multi.end(), [&](int a, int b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  const std::size_t n = multi.size();
  const std::size_t top = hyper.split_weights.size();
  std::vector<double> by_rank(n);
  for (std::size_t r = 0; r < n; ++r) {
    by_rank[r] = r < top ? hyper.split_weights[r] : hyper.split_remainder / static_cast<double>(n - top);
  }
  double total = 0.0;
  for (double w : by_rank) total += w;

  std::vector<std::pair<int, double>> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    // tail mode hands the largest weight to the smallest cluster
    const double w = mode == SplitMode::Head ? by_rank[r] : by_rank[n - 1 - r];
    out[r] = {multi[r], w / total};
  }
  return out;
}

namespace {

struct ScanResult {
  std::vector<int> labels;
  std::vector<double> step_log_prob;
  double log_prob = 0.0;
};

// Sequential restricted Gibbs scan of `members` between labels a and b,
// starting from `launch`. With `forced` the scan replays those labels and
// only accumulates their probabilities.
ScanResult restricted_scan(const LikelihoodContext& ctx, const ClusterCovParams& cov,
                           const std::vector<double>& log_w, const std::vector<int>& members,
                           int a, int b, const std::vector<int>& launch,
                           const std::vector<int>* forced, Rng& rng) {
  std::vector<int> sa, sb;
  for (std::size_t i = 0; i < members.size(); ++i) (launch[i] == a ? sa : sb).push_back(members[i]);
  ScanResult out;
  out.labels = launch;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const int m = members[i];
    erase_value(out.labels[i] == a ? sa : sb, m);
    const double base_a = block_ll(ctx, cov, sa, a);
    const double base_b = block_ll(ctx, cov, sb, b);
    const double lp_a = log_w[static_cast<std::size_t>(a)] + block_ll(ctx, cov, with_member(sa, m), a) + base_b;
    const double lp_b = log_w[static_cast<std::size_t>(b)] + base_a + block_ll(ctx, cov, with_member(sb, m), b);
    const double log_pa = log_share(lp_a, lp_b);
    const double log_pb = log_share(lp_b, lp_a);
    int chosen;
    if (forced) {
      chosen = (*forced)[i];
    } else {
      chosen = rng.uniform() < std::exp(log_pa) ? a : b;
    }
    const double lp = chosen == a ? log_pa : log_pb;
    out.step_log_prob.push_back(lp);
    out.log_prob += lp;
    out.labels[i] = chosen;
    insert_sorted(chosen == a ? sa : sb, m);
  }
  return out;
}

}  // namespace

std::optional<HtsmProposal> propose_split(const ChainState& state, const LikelihoodContext& ctx,
                                          const HyperParams& hyper, SplitMode mode, Rng& rng) {
  const int new_label = state.assignment.num_clusters();
  if (new_label >= state.assignment.max_clusters()) return std::nullopt;
  const auto weights = build_split_weights(state.assignment, mode, hyper);
  if (weights.empty()) return std::nullopt;

  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) lw[i] = std::log(weights[i].second);
  const int j = weights[rng.categorical_log(lw)].first;

  HtsmProposal p;
  p.kind = MoveKind::Split;
  p.kept = j;
  p.other = new_label;
  p.members = state.assignment.members()[static_cast<std::size_t>(j)];
  p.launch.resize(p.members.size());
  for (auto& l : p.launch) l = rng.bernoulli(0.5) ? j : new_label;

  p.cov = state.cov;
  p.cov.sigma2[static_cast<std::size_t>(new_label)] = p.cov.sigma2[static_cast<std::size_t>(j)];
  p.cov.rho[static_cast<std::size_t>(new_label)] = p.cov.rho[static_cast<std::size_t>(j)];

  const auto log_w = state.sticks.log_weights();
  const auto scan = restricted_scan(ctx, p.cov, log_w, p.members, j, new_label, p.launch, nullptr, rng);
  p.step_log_prob = scan.step_log_prob;

  std::vector<int> z = state.assignment.labels();
  int moved = 0;
  for (std::size_t i = 0; i < p.members.size(); ++i) {
    z[static_cast<std::size_t>(p.members[i])] = scan.labels[i];
    moved += scan.labels[i] == new_label;
  }
  p.degenerate = moved == 0 || moved == static_cast<int>(p.members.size());
  p.assignment = ClusterAssignment(std::move(z), state.assignment.max_clusters());

  const double d = static_cast<double>(p.members.size());
  const double j_after = static_cast<double>(new_label) + 1.0;
  p.log_q_forward = d * std::log(0.5) + scan.log_prob;
  p.log_q_reverse = -std::log(j_after * (j_after - 1.0));
  return p;
}

std::optional<HtsmProposal> propose_merge(const ChainState& state, const LikelihoodContext& ctx,
                                          Rng& rng, const MergeChoice* choice) {
  const auto counts = state.assignment.counts();
  std::vector<int> occupied;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] > 0) occupied.push_back(static_cast<int>(j));
  }
  const auto n_occ = static_cast<int>(occupied.size());
  if (n_occ < 2) return std::nullopt;

  HtsmProposal p;
  p.kind = MoveKind::Merge;
  if (choice) {
    p.kept = choice->kept;
    p.other = choice->absorbed;
    if (p.kept == p.other || counts[static_cast<std::size_t>(p.kept)] == 0 ||
        counts[static_cast<std::size_t>(p.other)] == 0) {
      throw DomainError("merge choice must name two distinct occupied clusters");
    }
  } else {
    const int i = rng.uniform_int(0, n_occ - 1);
    int i2 = rng.uniform_int(0, n_occ - 2);
    if (i2 >= i) ++i2;
    p.kept = occupied[static_cast<std::size_t>(i)];
    p.other = occupied[static_cast<std::size_t>(i2)];
  }

  std::vector<int> original;
  for (int m = 0; m < state.assignment.size(); ++m) {
    const int z = state.assignment[m];
    if (z == p.kept || z == p.other) {
      p.members.push_back(m);
      original.push_back(z);
    }
  }
  if (choice) {
    if (choice->launch.size() != p.members.size()) {
      throw DomainError("merge choice launch has the wrong length");
    }
    p.launch = choice->launch;
  } else {
    p.launch.resize(p.members.size());
    for (auto& l : p.launch) l = rng.bernoulli(0.5) ? p.kept : p.other;
  }

  // reverse split: replay the restricted scan onto the current configuration
  const auto log_w = state.sticks.log_weights();
  const auto scan = restricted_scan(ctx, state.cov, log_w, p.members, p.kept, p.other, p.launch,
                                    &original, rng);
  p.step_log_prob = scan.step_log_prob;

  std::vector<int> z = state.assignment.labels();
  for (int m : p.members) z[static_cast<std::size_t>(m)] = p.kept;
  p.assignment = ClusterAssignment(std::move(z), state.assignment.max_clusters());
  p.cov = state.cov;
  p.cov.sigma2[static_cast<std::size_t>(p.other)] = p.cov.sigma2[static_cast<std::size_t>(p.kept)];
  p.cov.rho[static_cast<std::size_t>(p.other)] = p.cov.rho[static_cast<std::size_t>(p.kept)];

  const double d = static_cast<double>(p.members.size());
  p.log_q_forward = -std::log(static_cast<double>(n_occ) * (n_occ - 1.0));
  p.log_q_reverse = d * std::log(0.5) + scan.log_prob;
  return p;
}

double theta_log_prior(const ClusterCovParams& cov, const std::vector<int>& sizes,
                       std::span<const int> labels, const CorrelationModel& corr,
                       const HyperParams& hyper) {
  double total = 0.0;
  for (int label : labels) {
    const auto j = static_cast<std::size_t>(label);
    if (sizes[j] == 0) continue;
    total += log_inv_gamma_density(cov.sigma2[j], hyper.a1, hyper.b1);
    // rho = 0 marks a correlation not yet drawn for a former singleton
    if (sizes[j] > 1 && cov.rho[j] != 0.0) total += rho_log_prior(corr, hyper, cov.rho[j]);
  }
  return total;
}

double log_partition_prior(const ClusterAssignment& assignment, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const auto counts = assignment.counts();
  double later = static_cast<double>(assignment.size());
  const double log_b1 = -std::log(alpha);  // log B(1, alpha)
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < counts.size(); ++j) {
    const double n = counts[j];
    later -= n;
    total += std::lgamma(1.0 + n) + std::lgamma(alpha + later) - std::lgamma(1.0 + n + alpha + later) - log_b1;
  }
  return total;
}

double htsm_log_acceptance(const ChainState& state, const HtsmProposal& proposal,
                           const LikelihoodContext& ctx, const HyperParams& hyper) {
  if (proposal.degenerate) return kNegInf;
  const int labels[2] = {proposal.kept, proposal.other};

  const auto before = state.assignment.members();
  const auto after = proposal.assignment.members();
  double ll_diff = 0.0;
  for (int label : labels) {
    const auto j = static_cast<std::size_t>(label);
    ll_diff += block_ll(ctx, proposal.cov, after[j], label) - block_ll(ctx, state.cov, before[j], label);
  }

  double w_diff = 0.0;
  if (hyper.htsm_marginal_weights) {
    w_diff = log_partition_prior(proposal.assignment, state.sticks.alpha) -
             log_partition_prior(state.assignment, state.sticks.alpha);
  } else {
    const auto log_w = state.sticks.log_weights();
    for (int m : proposal.members) {
      w_diff += log_w[static_cast<std::size_t>(proposal.assignment[m])] -
                log_w[static_cast<std::size_t>(state.assignment[m])];
    }
  }

  const double prior_diff =
      theta_log_prior(proposal.cov, proposal.assignment.counts(), labels, ctx.corr, hyper) -
      theta_log_prior(state.cov, state.assignment.counts(), labels, ctx.corr, hyper);

  const double total = (proposal.log_q_reverse - proposal.log_q_forward) + ll_diff + w_diff + prior_diff;
  return std::isnan(total) ? kNegInf : total;
}

HtsmOutcome htsm_step(ChainState& state, const LikelihoodContext& ctx, const HyperParams& hyper,
                      SplitMode mode, Rng& rng) {
  HtsmOutcome out;
  const bool want_split = rng.uniform() < hyper.p0;

  std::optional<HtsmProposal> proposal;
  if (want_split) {
    proposal = propose_split(state, ctx, hyper, mode, rng);
    if (!proposal) proposal = propose_merge(state, ctx, rng);
  } else {
    proposal = propose_merge(state, ctx, rng);
    if (!proposal) proposal = propose_split(state, ctx, hyper, mode, rng);
  }
  if (!proposal) return out;

  out.attempted = true;
  out.kind = proposal->kind;
  out.log_alpha = htsm_log_acceptance(state, *proposal, ctx, hyper);
  if (std::log(rng.uniform()) < out.log_alpha) {
    out.accepted = true;
    if (proposal->kind == MoveKind::Split) {
      state.rho_step[static_cast<std::size_t>(proposal->other)] =
          state.rho_step[static_cast<std::size_t>(proposal->kept)];
    }
    state.assignment = std::move(proposal->assignment);
    state.cov = std::move(proposal->cov);
    relabel(state);
  }
  return out;
}

Phase PhaseSchedule::phase_of(long t) const {
  if (t <= burnin1) return Phase::BurnIn1;
  if (t <= burnin1 + burnin2) return Phase::BurnIn2;
  return Phase::Sampling;
}

void PhaseSchedule::validate() const {
  if (burnin1 < 0 || burnin2 < 0 || sampling < 0) {
    throw ConfigError("phase iteration counts must be non-negative");
  }
}

}  // namespace covclust
