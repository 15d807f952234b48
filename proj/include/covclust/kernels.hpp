#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covclust/model.hpp"

namespace covclust {

enum class KernelFamily { CompoundSymmetry, GenAR1, Matern32 };

std::string to_string(KernelFamily family);
/// Accepts "cs", "ar1", "matern32". Throws ConfigError otherwise.
KernelFamily parse_kernel_family(const std::string& text);

struct KernelSpec {
  KernelFamily family = KernelFamily::CompoundSymmetry;
  double nu = 0.2;              // distance exponent of the generalized AR(1)
  double distance_scale = 1.0;  // divisor applied to Euclidean distances

  bool needs_locations() const { return family != KernelFamily::CompoundSymmetry; }
  void validate() const;
};

/// Admissible range of rho: (lower, upper].
struct RhoSupport {
  double lower;
  double upper;
  bool contains(double rho) const { return rho > lower && rho <= upper; }
};

/// Per-cluster log-determinant and trace term of the block likelihood.
struct BlockTerms {
  double logdet = 0.0;  // log det Gamma(S_j, S_j; rho_j)
  double trace = 0.0;   // tr{A_j Gamma^{-1}(S_j, S_j; rho_j)}
  int size = 0;
};

/// One BlockTerms per label 0..J-1; empty labels carry size 0.
struct BlockQuadratics {
  std::vector<BlockTerms> blocks;
};

/// Correlation kernel bound to a set of M locations. Owns everything needed
/// to build any block Gamma(S_j, S_j; rho).
class CorrelationModel {
 public:
  CorrelationModel(KernelSpec spec, std::optional<Eigen::MatrixXd> locations, int m,
                   double rho_upper);

  const KernelSpec& spec() const { return spec_; }
  int dimension() const { return m_; }
  RhoSupport support() const;

  /// eta = (M-1) rho / M + 1/M for compound symmetry, eta = rho otherwise.
  double eta(double rho) const;
  double rho_from_eta(double eta) const;
  /// log |d eta / d rho|.
  double log_eta_jacobian() const;

  double scaled_distance(int a, int b) const;
  /// Off-diagonal correlation between two distinct members.
  double correlation(int a, int b, double rho) const;

  /// Throws DomainError if rho is outside the support. rho = 0 is admitted
  /// and yields the identity.
  Eigen::MatrixXd corr_matrix(std::span<const int> members, double rho) const;
  double block_logdet(std::span<const int> members, double rho) const;
  /// tr(a_block Gamma^{-1}) with a_block given in member order.
  double block_trace(std::span<const int> members, double rho,
                     const Eigen::MatrixXd& a_block) const;
  /// Both terms at once; `a_full` is the M x M residual cross-product in
  /// original coordinate order.
  BlockTerms block_terms(std::span<const int> members, double rho,
                         const Eigen::MatrixXd& a_full) const;

 private:
  void check_rho(double rho) const;

  KernelSpec spec_;
  std::optional<Eigen::MatrixXd> locations_;
  int m_;
  double rho_upper_;
};

/// Gaussian log-likelihood contribution of one block, including the
/// -N d / 2 log(2 pi) constant.
double block_log_likelihood(const BlockTerms& terms, double sigma2, int n);

/// R = Y - X B^T, N x M.
Eigen::MatrixXd residual_matrix(const Dataset& data, const RegressionCoefficients& coef);

/// sum_i r_i r_i^T in original coordinate order.
Eigen::MatrixXd residual_crossproduct(const Dataset& data, const RegressionCoefficients& coef);

/// A = P_pi [sum_i r_i r_i^T] P_pi^T, rows and columns gathered into
/// permuted order.
Eigen::MatrixXd residual_crossproduct(const Dataset& data, const RegressionCoefficients& coef,
                                      const Permutation& perm);

BlockQuadratics block_quadratics(const CorrelationModel& corr, const ClusterAssignment& assignment,
                                 const ClusterCovParams& cov, const Eigen::MatrixXd& a_full);

/// Exact Gaussian log-density log p{Y | B, Z, rho, sigma^2} via the block
/// decomposition.
double log_likelihood(const CorrelationModel& corr, const ChainState& state, const Dataset& data);

/// Same, from precomputed block terms.
double log_likelihood(const BlockQuadratics& blocks, const ClusterCovParams& cov, int n);

}  // namespace covclust
