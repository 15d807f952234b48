#include "covclust/simulate.hpp"

#include <cmath>

#include "covclust/errors.hpp"

namespace covclust {

void SimDesign::validate() const {
  if (m < 2) throw ConfigError("simulation needs m >= 2");
  if (n < 2) throw ConfigError("simulation needs n >= 2");
  if (partition == PartitionKind::UniformEqual) {
    if (clusters < 1 || clusters > m || m % clusters != 0) {
      throw ConfigError("equal-size partition needs clusters dividing m");
    }
  } else if (!(alpha_true > 0.0)) {
    throw ConfigError("alpha_true must be positive");
  }
  if (!(rho_const > 0.0 && rho_const < 1.0)) throw ConfigError("rho_const must lie in (0, 1)");
  if (!(sigma2_const > 0.0)) throw ConfigError("sigma2_const must be positive");
  kernel.validate();
}

std::vector<double> rho_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(0.40 + 0.05 * i);
  return g;
}

std::vector<double> sigma2_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 11; ++i) g.push_back(0.95 + 0.05 * i);
  return g;
}

ClusterAssignment gen_partition(const SimDesign& design, Rng& rng) {
  const int m = design.m;
  std::vector<int> z(static_cast<std::size_t>(m));
  if (design.partition == PartitionKind::UniformEqual) {
    const int size = m / design.clusters;
    for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(i)] = i / size;
  } else {
    std::vector<int> tables;
    for (int i = 0; i < m; ++i) {
      std::vector<double> lw;
      for (int c : tables) lw.push_back(std::log(static_cast<double>(c)));
      lw.push_back(std::log(design.alpha_true));
      const auto t = rng.categorical_log(lw);
      if (t == tables.size()) tables.push_back(0);
      ++tables[t];
      z[static_cast<std::size_t>(i)] = static_cast<int>(t);
    }
  }
  return ClusterAssignment(canonical_labels(z), m);
}

Eigen::MatrixXd gen_covariates(int n, Rng& rng) {
  Eigen::MatrixXd x(n, 5);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    x(i, 2) = rng.bernoulli(0.7) ? 1.0 : 0.0;
    x(i, 3) = rng.normal();
    x(i, 4) = x(i, 1) * x(i, 3);
  }
  return x;
}

std::optional<Eigen::MatrixXd> gen_locations(int m, const KernelSpec& kernel) {
  switch (kernel.family) {
    case KernelFamily::CompoundSymmetry:
      return std::nullopt;
    case KernelFamily::GenAR1: {
      Eigen::MatrixXd loc(m, 1);
      for (int i = 0; i < m; ++i) loc(i, 0) = i + 1.0;
      return loc;
    }
    case KernelFamily::Matern32: {
      const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m)) - 1e-12));
      Eigen::MatrixXd loc(m, 2);
      for (int i = 0; i < m; ++i) {
        loc(i, 0) = i % side + 1.0;
        loc(i, 1) = i / side + 1.0;
      }
      return loc;
    }
  }
  return std::nullopt;
}

ClusterCovParams gen_params(const SimDesign& design, const ClusterAssignment& assignment, Rng& rng) {
  const auto counts = assignment.counts();
  const int j_max = assignment.num_clusters();
  ClusterCovParams cov;
  cov.sigma2.resize(static_cast<std::size_t>(j_max));
  cov.rho.resize(static_cast<std::size_t>(j_max));
  const auto rg = rho_grid();
  const auto sg = sigma2_grid();
  for (int j = 0; j < j_max; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (design.grid == ParamGrid::Heterogeneous) {
      cov.rho[jj] = rg[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(rg.size()) - 1))];
      cov.sigma2[jj] = sg[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(sg.size()) - 1))];
    } else {
      cov.rho[jj] = design.rho_const;
      cov.sigma2[jj] = design.sigma2_const;
    }
    if (counts[jj] == 1) cov.rho[jj] = 0.0;
  }
  return cov;
}

Eigen::MatrixXd gen_outcomes(const CorrelationModel& corr, const ClusterAssignment& assignment,
                             const ClusterCovParams& cov, const RegressionCoefficients& coef,
                             const Eigen::MatrixXd& covariates, Rng& rng) {
  const auto n = covariates.rows();
  Eigen::MatrixXd y = covariates * coef.b.transpose();
  const auto members = assignment.members();
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto& s = members[j];
    if (s.empty()) continue;
    const auto d = static_cast<Eigen::Index>(s.size());
    const double rho = s.size() == 1 ? 0.0 : cov.rho[j];
    const Eigen::MatrixXd sigma = cov.sigma2[j] * corr.corr_matrix(s, rho);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance block is not positive definite");
    Eigen::MatrixXd e(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < d; ++c) e(i, c) = rng.normal();
    }
    const Eigen::MatrixXd draws = e * llt.matrixL().transpose();
    for (Eigen::Index c = 0; c < d; ++c) y.col(s[static_cast<std::size_t>(c)]) += draws.col(c);
  }
  return y;
}

SimulatedData simulate(const SimDesign& design) {
  design.validate();
  Rng rng(design.seed);
  SimulatedData out;
  out.truth.seed = design.seed;
  out.truth.assignment = gen_partition(design, rng);
  out.truth.cov = gen_params(design, out.truth.assignment, rng);
  out.truth.coef.b.resize(design.m, 5);
  for (int q = 0; q < 5; ++q) {
    for (int k = 0; k < design.m; ++k) out.truth.coef.b(k, q) = rng.normal();
  }
  out.data.covariates = gen_covariates(design.n, rng);
  out.data.locations = gen_locations(design.m, design.kernel);
  const CorrelationModel corr(design.kernel, out.data.locations, design.m, 0.999);
  out.data.outcomes = gen_outcomes(corr, out.truth.assignment, out.truth.cov, out.truth.coef,
                                   out.data.covariates, rng);
  return out;
}

}  // namespace covclust
