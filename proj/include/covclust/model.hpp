#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covclust {

// Cluster labels are 0-based throughout the library (0..K-1). File formats
// and the CLI use 1-based labels.

/// Hyperparameters of the hierarchical model and the sampler tuning constants.
struct HyperParams {
  int k = 1;                       // maximum number of clusters
  double tau2 = 1.0;               // prior variance of regression coefficients
  double a0 = 1.01, b0 = 1.01;     // Gamma(shape, rate) prior on alpha
  double a1 = 2.01, b1 = 1.01;     // Inverse-Gamma prior on sigma^2
  double a2 = 2.01, b2 = 1.01;     // Beta prior on the transformed rho
  double lambda_burnin = 100.0;    // slice step-size scale, phases I and II
  double lambda_sampling = 150.0;  // slice step-size scale, phase III
  double p0 = 0.7;                 // split probability in split-merge moves
  int walker_step = 2;             // step size s of the label slice sampler; 1 never moves
  double rho_upper = 0.95;
  // Unnormalized split-selection weights of the largest multi-member
  // clusters; clusters beyond these share `split_remainder` equally.
  std::vector<double> split_weights{0.3, 0.2, 0.15, 0.1};
  double split_remainder = 0.25;
  // split-merge ratio uses p(Z | alpha) with the stick variables integrated
  // out; false uses p(Z | V) at the current V
  bool htsm_marginal_weights = true;

  /// Defaults used in the simulation studies for an M-dimensional outcome.
  /// `k == 0` selects K = M.
  static HyperParams defaults(int m, int k = 0);

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Outcomes, covariates and optional coordinate locations.
struct Dataset {
  Eigen::MatrixXd outcomes;    // N x M, rows are independent replicates
  Eigen::MatrixXd covariates;  // N x p, includes the intercept column
  std::optional<Eigen::MatrixXd> locations;  // M x dim
  std::vector<std::string> labels;           // column labels, may be empty

  int n() const { return static_cast<int>(outcomes.rows()); }
  int m() const { return static_cast<int>(outcomes.cols()); }
  int p() const { return static_cast<int>(covariates.cols()); }

  /// Throws DataError on shape mismatch, non-finite entries or a
  /// locations/kernel mismatch.
  void validate(bool needs_locations) const;
};

/// Cluster index vector z with K available labels.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  ClusterAssignment(std::vector<int> z, int k);

  const std::vector<int>& labels() const { return z_; }
  int operator[](int m) const { return z_[static_cast<std::size_t>(m)]; }
  void set(int m, int label) { z_[static_cast<std::size_t>(m)] = label; }

  int size() const { return static_cast<int>(z_.size()); }
  int max_clusters() const { return k_; }

  /// J: one past the largest label in use (equals the occupied count after
  /// relabeling).
  int num_clusters() const;
  int num_occupied() const;
  /// J+: number of clusters with more than one member.
  int num_multi() const;
  /// Counts per label, length K.
  std::vector<int> counts() const;
  /// Members per label in ascending index order, length K.
  std::vector<std::vector<int>> members() const;

  bool operator==(const ClusterAssignment&) const = default;

 private:
  std::vector<int> z_;
  int k_ = 0;
};

/// Stable ordering that sorts z ascending. `order[i]` is the original index
/// placed at permuted position i; `position` is its inverse.
struct Permutation {
  std::vector<int> order;
  std::vector<int> position;
};

Permutation permutation_from_z(std::span<const int> z);

struct StickState {
  std::vector<double> v;  // stick end-points, v.back() == 1
  std::vector<double> w;  // simplex weights
  double alpha = 1.0;

  /// log w_j, computed without forming the products explicitly.
  std::vector<double> log_weights() const;
};

/// w_j = v_j prod_{l<j} (1 - v_l). Throws DomainError when an entry is
/// outside (0, 1] or the last entry is not 1.
std::vector<double> stick_weights(std::span<const double> v);

/// Per-slot covariance parameters theta_j = (sigma2_j, rho_j), j < K.
struct ClusterCovParams {
  std::vector<double> sigma2;
  std::vector<double> rho;
};

struct RegressionCoefficients {
  Eigen::MatrixXd b;  // M x p, column q is beta_q
};

enum class Phase { BurnIn1, BurnIn2, Sampling };

std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

struct ChainState {
  ClusterAssignment assignment;
  StickState sticks;
  ClusterCovParams cov;
  RegressionCoefficients coef;
  std::vector<double> rho_step;  // slice-sampler step size per slot
  long iteration = 0;
  Phase phase = Phase::BurnIn1;
};

/// new_label[old_label] after sorting occupied clusters by decreasing size
/// (ties by first member index). Unused labels follow in ascending order.
std::vector<int> relabel_map(const ClusterAssignment& assignment);

std::pair<ClusterAssignment, ClusterCovParams> relabel(const ClusterAssignment& assignment,
                                                        const ClusterCovParams& cov);

/// Relabels the assignment and permutes every per-slot quantity of the state.
void relabel(ChainState& state);

/// Canonical label vector of the partition induced by z.
std::vector<int> canonical_labels(std::span<const int> z);

}  // namespace covclust
