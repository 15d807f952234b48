#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/random.hpp"

namespace covclust {

/// V_j ~ Beta(1 + m_j, alpha + sum_{l>j} m_l) for j < K, V_K = 1.
std::vector<double> sample_v(const ClusterAssignment& assignment, double alpha, Rng& rng);

/// sigma2_j ~ Inv-Gamma(a1 + N d_j / 2, b1 + trace_j / 2) for occupied
/// labels, Inv-Gamma(a1, b1) otherwise. Returns K values.
std::vector<double> sample_sigma2(const BlockQuadratics& blocks, const HyperParams& hyper, int n,
                                  Rng& rng);

/// alpha ~ Gamma(a0 + K - 1, b0 - sum_{j<K} log(1 - V_j)), shape-rate.
double sample_alpha(std::span<const double> v, const HyperParams& hyper, Rng& rng);

/// Log of the unnormalized prior density of rho (Beta on eta times the
/// transform Jacobian). -inf outside the support.
double rho_log_prior(const CorrelationModel& corr, const HyperParams& hyper, double rho);

/// Draw from the prior: eta ~ Beta(a2, b2), mapped back to rho and redrawn
/// until it falls inside the support.
double sample_rho_prior(const CorrelationModel& corr, const HyperParams& hyper, Rng& rng);

using LogDensity = std::function<double(double)>;

/// rho -> log p(rho_j | .) up to a constant for the block `members`.
/// Returns -inf outside the support.
LogDensity rho_log_conditional(const CorrelationModel& corr, std::vector<int> members,
                               double sigma2, const Eigen::MatrixXd& a_full, int n,
                               const HyperParams& hyper);

struct SliceDraw {
  double value;
  double step;
};

/// One Li-Walker slice update. The step size is refreshed as
/// 2|l - x0| + Exponential(mean lambda). Throws NumericalError after
/// 10000 shrinkage rounds or if the target is not finite at x0.
SliceDraw slice_sample_rho(const LogDensity& log_target, double x0, double step, double lambda,
                           RhoSupport support, Rng& rng);

/// Updates every rho slot of `state`: slice sampling for clusters with two or
/// more members, 0 for singletons, prior draws for unused slots.
void sample_rho_all(ChainState& state, const CorrelationModel& corr, const Eigen::MatrixXd& a_full,
                    int n, const HyperParams& hyper, double lambda, Rng& rng);

/// Conditional sampler for vec(B) through the eigendecompositions of X^T X
/// and of each block of Sigma^{-1}; no Kronecker product is formed.
class BSampler {
 public:
  BSampler(const Dataset& data, double tau2);

  const Eigen::MatrixXd& q1() const { return q1_; }
  const Eigen::VectorXd& lam1() const { return lam1_; }

  RegressionCoefficients sample(const ClusterAssignment& assignment, const ClusterCovParams& cov,
                                const CorrelationModel& corr, Rng& rng) const;

  /// Posterior mean of B.
  Eigen::MatrixXd mean(const ClusterAssignment& assignment, const ClusterCovParams& cov,
                       const CorrelationModel& corr) const;

  /// Dense Mp x Mp posterior covariance assembled from the eigen factors,
  /// vec index q * M + k. Intended for small problems and testing.
  Eigen::MatrixXd xi_dense(const ClusterAssignment& assignment, const ClusterCovParams& cov,
                           const CorrelationModel& corr) const;

 private:
  struct BlockEigen {
    std::vector<int> members;
    Eigen::MatrixXd vectors;   // d x d
    Eigen::VectorXd lam2;      // eigenvalues of the block of Sigma^{-1}
  };
  std::vector<BlockEigen> decompose(const ClusterAssignment& assignment,
                                    const ClusterCovParams& cov,
                                    const CorrelationModel& corr) const;
  // Rotated data term T = W^T Sigma^{-1} Y^T X Q1 and the scale matrix D.
  void rotated_terms(const std::vector<BlockEigen>& blocks, Eigen::MatrixXd& t,
                     Eigen::MatrixXd& d) const;
  Eigen::MatrixXd unrotate(const std::vector<BlockEigen>& blocks, const Eigen::MatrixXd& z) const;

  int m_;
  int p_;
  double tau2_;
  Eigen::MatrixXd q1_;
  Eigen::VectorXd lam1_;
  Eigen::MatrixXd yx_;  // Y^T X, M x p
};

}  // namespace covclust
