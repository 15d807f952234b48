#pragma once
// Random problem instances shared by unit and acceptance tests.

#include <optional>

#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/random.hpp"
#include "oracles.hpp"

namespace fixture {

struct Instance {
  covclust::Dataset data;
  covclust::KernelSpec spec;
  Eigen::MatrixXd loc;  // always filled; only passed to the model when needed
  covclust::ChainState state;
  int j = 0;
};

inline covclust::KernelSpec kernel_of(int which) {
  covclust::KernelSpec s;
  s.family = which == 0   ? covclust::KernelFamily::CompoundSymmetry
             : which == 1 ? covclust::KernelFamily::GenAR1
                          : covclust::KernelFamily::Matern32;
  if (s.family == covclust::KernelFamily::Matern32) s.distance_scale = 4.0;
  if (s.family == covclust::KernelFamily::GenAR1) s.nu = 0.2 + 0.6 * (which % 2);
  return s;
}

/// M coordinates split into up to `max_j` clusters, K = M slots, random theta
/// inside a safe part of the support, random B and data.
inline Instance random_instance(covclust::Rng& rng, int m, int max_j, int n, int p,
                                covclust::KernelSpec spec) {
  Instance in;
  in.spec = spec;
  in.j = rng.uniform_int(1, std::min(max_j, m));
  std::vector<int> z(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(i)] = i < in.j ? i : rng.uniform_int(0, in.j - 1);
  for (int i = m - 1; i > 0; --i) std::swap(z[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  in.state.assignment = covclust::ClusterAssignment(z, m);
  in.state.cov.sigma2.resize(static_cast<std::size_t>(m));
  in.state.cov.rho.resize(static_cast<std::size_t>(m));
  const auto counts = in.state.assignment.counts();
  for (int k = 0; k < m; ++k) {
    in.state.cov.sigma2[static_cast<std::size_t>(k)] = rng.uniform(0.5, 2.0);
    const bool multi = counts[static_cast<std::size_t>(k)] > 1;
    double rho = rng.uniform(0.05, 0.9);
    if (spec.family == covclust::KernelFamily::CompoundSymmetry && rng.bernoulli(0.2)) {
      rho = -rng.uniform(0.0, 0.5) / (m - 1.0);
    }
    in.state.cov.rho[static_cast<std::size_t>(k)] = multi ? rho : 0.0;
  }
  in.state.coef.b = oracle::random_normal(m, p, rng);
  in.state.sticks.v.assign(static_cast<std::size_t>(m), 0.5);
  in.state.sticks.v.back() = 1.0;
  in.state.sticks.w = covclust::stick_weights(in.state.sticks.v);
  in.state.rho_step.assign(static_cast<std::size_t>(m), 1.0);

  in.loc = oracle::random_locations(m, spec.family == covclust::KernelFamily::Matern32 ? 2 : 1, rng);
  in.data.covariates = oracle::random_normal(n, p, rng);
  in.data.covariates.col(0).setOnes();
  in.data.outcomes = oracle::random_normal(n, m, rng);
  if (spec.needs_locations()) in.data.locations = in.loc;
  return in;
}

inline covclust::CorrelationModel model_of(const Instance& in, double rho_upper = 0.95) {
  return covclust::CorrelationModel(in.spec, in.data.locations, in.data.m(), rho_upper);
}

/// Dense log-density of the whole dataset under the instance's state, built
/// from P^T Sigma_perm P. For CS the locations are irrelevant.
inline double dense_loglik(const Instance& in) {
  Eigen::MatrixXd loc = in.loc;
  if (!in.spec.needs_locations()) {
    loc.resize(in.data.m(), 1);
    for (int i = 0; i < in.data.m(); ++i) loc(i, 0) = i;
  }
  const Eigen::MatrixXd sigma = oracle::permuted_sigma(in.spec, loc, in.state.assignment.labels(),
                                                       in.state.cov.sigma2, in.state.cov.rho);
  const Eigen::MatrixXd resid =
      in.data.outcomes - in.data.covariates * in.state.coef.b.transpose();
  return oracle::mvn_logpdf_rows(resid, sigma);
}

}  // namespace fixture
