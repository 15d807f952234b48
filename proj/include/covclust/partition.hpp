#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/random.hpp"

namespace covclust {

enum class SplitMode { Head, Tail };
enum class MoveKind { Split, Merge };

/// Read-only pieces every partition move needs.
struct LikelihoodContext {
  const CorrelationModel& corr;
  const Eigen::MatrixXd& a_full;  // residual cross-product, original order
  int n;
};

/// Log-likelihood of one block with the covariance parameters of `label`.
/// Singleton blocks ignore rho.
double block_ll(const LikelihoodContext& ctx, const ClusterCovParams& cov,
                std::span<const int> members, int label);

/// Per-label member lists and block log-likelihoods of a chain state, kept in
/// sync while single coordinates move. Holds a reference to the state.
class ZCache {
 public:
  ZCache(const LikelihoodContext& ctx, ChainState& state);

  const ChainState& state() const { return state_; }
  const std::vector<int>& members(int label) const { return members_[static_cast<std::size_t>(label)]; }
  double cluster_ll(int label) const { return ll_[static_cast<std::size_t>(label)]; }
  double log_weight(int label) const { return log_w_[static_cast<std::size_t>(label)]; }
  int max_clusters() const { return static_cast<int>(members_.size()); }

  /// log p(Z_m = j | Z_{-m}, .) minus log p(Z_m = z_m | Z_{-m}, .).
  double log_conditional(int m, int j) const;
  void move(int m, int to);

 private:
  LikelihoodContext ctx_;  // copied, callers often pass a temporary
  ChainState& state_;
  std::vector<std::vector<int>> members_;
  std::vector<double> ll_;
  std::vector<double> log_w_;
};

/// log w_j plus the log-likelihood with z_m set to j, relative to the
/// current likelihood. Only the two affected blocks are evaluated.
double z_log_conditional(int m, int j, const ChainState& state, const LikelihoodContext& ctx);

/// One Walker slice update of z_m. Returns the new label.
int walker_slice_z(int m, ZCache& cache, int step, Rng& rng);
/// One full-conditional Gibbs update of z_m over all K labels.
int gibbs_z(int m, ZCache& cache, Rng& rng);

void walker_sweep(ChainState& state, const LikelihoodContext& ctx, int step, Rng& rng);
void gibbs_sweep(ChainState& state, const LikelihoodContext& ctx, Rng& rng);

/// Split-selection probabilities over clusters with more than one member,
/// as (label, probability) pairs in decreasing cluster size order. Empty
/// when no split is possible.
std::vector<std::pair<int, double>> build_split_weights(const ClusterAssignment& assignment,
                                                        SplitMode mode, const HyperParams& hyper);

struct HtsmProposal {
  MoveKind kind = MoveKind::Split;
  int kept = -1;     // cluster j
  int other = -1;    // new label (split) or absorbed label j' (merge)
  std::vector<int> members;  // coordinates touched, ascending
  std::vector<int> launch;   // launch label per entry of `members`
  std::vector<double> step_log_prob;  // restricted Gibbs log-probabilities
  ClusterAssignment assignment;       // proposed state
  ClusterCovParams cov;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  bool degenerate = false;  // split left one side empty
};

/// Fixes the random choices of a merge proposal.
struct MergeChoice {
  int kept;
  int absorbed;
  std::vector<int> launch;  // launch label (kept or absorbed) per merged member, ascending
};

/// Split of a cluster chosen by the split weights. Returns nothing when no
/// cluster can be split or all K labels are in use.
std::optional<HtsmProposal> propose_split(const ChainState& state, const LikelihoodContext& ctx,
                                          const HyperParams& hyper, SplitMode mode, Rng& rng);

/// Merge of an ordered pair of clusters. Returns nothing when fewer than two
/// clusters are occupied. `choice` overrides the pair and the launch state
/// of the reverse-split replay.
std::optional<HtsmProposal> propose_merge(const ChainState& state, const LikelihoodContext& ctx,
                                          Rng& rng, const MergeChoice* choice = nullptr);

/// Sum of log Inv-Gamma densities of sigma2 and, for clusters with two or
/// more members and a set rho, the log prior density of rho over `labels`.
double theta_log_prior(const ClusterCovParams& cov, const std::vector<int>& sizes,
                       std::span<const int> labels, const CorrelationModel& corr,
                       const HyperParams& hyper);

/// log p(Z | alpha) of the truncated stick-breaking prior with V integrated
/// out: sum over slots j < K-1 of log B(1 + n_j, alpha + n_{>j}) - log B(1, alpha).
double log_partition_prior(const ClusterAssignment& assignment, double alpha);

/// log alpha* of moving from `state` to the proposal.
double htsm_log_acceptance(const ChainState& state, const HtsmProposal& proposal,
                           const LikelihoodContext& ctx, const HyperParams& hyper);

struct HtsmOutcome {
  bool attempted = false;
  bool accepted = false;
  MoveKind kind = MoveKind::Split;
  double log_alpha = 0.0;
};

/// Split with probability p0, merge otherwise; an impossible move type falls
/// through to the other one. Relabels on acceptance.
HtsmOutcome htsm_step(ChainState& state, const LikelihoodContext& ctx, const HyperParams& hyper,
                      SplitMode mode, Rng& rng);

struct PhaseSchedule {
  long burnin1 = 1000;
  long burnin2 = 1000;
  long sampling = 8000;

  long total() const { return burnin1 + burnin2 + sampling; }
  /// Phase of the 1-based iteration `t`.
  Phase phase_of(long t) const;
  void validate() const;
};

}  // namespace covclust
