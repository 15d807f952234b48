#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/random.hpp"

namespace covclust {

enum class PartitionKind { UniformEqual, DirichletProcess };
enum class ParamGrid { Heterogeneous, Homogeneous };

struct SimDesign {
  int m = 100;
  int n = 100;
  PartitionKind partition = PartitionKind::UniformEqual;
  int clusters = 20;          // J for equal-size partitions
  double alpha_true = 6.0;    // concentration for the DP partition
  KernelSpec kernel;
  ParamGrid grid = ParamGrid::Heterogeneous;
  double rho_const = 0.7;     // homogeneous design values
  double sigma2_const = 1.1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Ground truth behind a simulated dataset; cov and b are indexed by the
/// canonical labels 0..J-1.
struct TruthBundle {
  ClusterAssignment assignment;
  ClusterCovParams cov;
  RegressionCoefficients coef;
  std::uint64_t seed = 0;
};

struct SimulatedData {
  Dataset data;
  TruthBundle truth;
};

/// Candidate values for the heterogeneous design.
std::vector<double> rho_grid();
std::vector<double> sigma2_grid();

/// Equal contiguous blocks or a Chinese-restaurant draw, relabeled by size.
/// The returned assignment has K = M.
ClusterAssignment gen_partition(const SimDesign& design, Rng& rng);

/// Columns: 1, Bernoulli(0.5), Bernoulli(0.7), N(0,1), X2 * X4.
Eigen::MatrixXd gen_covariates(int n, Rng& rng);

/// Line 1..M for the generalized AR(1), a ceil(sqrt(M))-wide unit grid for
/// Matern. Empty for compound symmetry.
std::optional<Eigen::MatrixXd> gen_locations(int m, const KernelSpec& kernel);

/// One (sigma2, rho) per occupied cluster; singletons get rho = 0.
ClusterCovParams gen_params(const SimDesign& design, const ClusterAssignment& assignment, Rng& rng);

/// N draws of y_i = B X_i + e_i with block-diagonal Sigma, one Cholesky
/// factor per block.
Eigen::MatrixXd gen_outcomes(const CorrelationModel& corr, const ClusterAssignment& assignment,
                             const ClusterCovParams& cov, const RegressionCoefficients& coef,
                             const Eigen::MatrixXd& covariates, Rng& rng);

SimulatedData simulate(const SimDesign& design);

}  // namespace covclust
