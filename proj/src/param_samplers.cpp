#include "covclust/param_samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covclust/errors.hpp"

namespace covclust {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxSliceRounds = 10000;
}  // namespace

std::vector<double> sample_v(const ClusterAssignment& assignment, double alpha, Rng& rng) {
  const auto counts = assignment.counts();
  const std::size_t k = counts.size();
  std::vector<double> v(k, 1.0);
  long tail = 0;
  for (int c : counts) tail += c;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    tail -= counts[j];
    double draw = rng.beta(1.0 + counts[j], alpha + static_cast<double>(tail));
    // keep V strictly inside (0, 1] so the weights stay well-defined
    draw = std::clamp(draw, std::numeric_limits<double>::min(), 1.0);
    v[j] = draw;
  }
  return v;
}

std::vector<double> sample_sigma2(const BlockQuadratics& blocks, const HyperParams& hyper, int n,
                                  Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(hyper.k));
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (j < blocks.blocks.size() && blocks.blocks[j].size > 0) {
      const auto& b = blocks.blocks[j];
      out[j] = rng.inv_gamma(hyper.a1 + 0.5 * n * b.size, hyper.b1 + 0.5 * b.trace);
    } else {
      out[j] = rng.inv_gamma(hyper.a1, hyper.b1);
    }
  }
  return out;
}

double sample_alpha(std::span<const double> v, const HyperParams& hyper, Rng& rng) {
  const double floor = std::log(1e-12);
  double rate = hyper.b0;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    rate -= std::max(std::log1p(-v[j]), floor);
  }
  const double shape = hyper.a0 + static_cast<double>(v.size()) - 1.0;
  return rng.gamma(shape, rate);
}

double rho_log_prior(const CorrelationModel& corr, const HyperParams& hyper, double rho) {
  if (!corr.support().contains(rho)) return kNegInf;
  const double eta = corr.eta(rho);
  if (!(eta > 0.0 && eta < 1.0)) return kNegInf;
  const double log_beta_fn =
      std::lgamma(hyper.a2) + std::lgamma(hyper.b2) - std::lgamma(hyper.a2 + hyper.b2);
  return (hyper.a2 - 1.0) * std::log(eta) + (hyper.b2 - 1.0) * std::log1p(-eta) - log_beta_fn +
         corr.log_eta_jacobian();
}

double sample_rho_prior(const CorrelationModel& corr, const HyperParams& hyper, Rng& rng) {
  const auto support = corr.support();
  for (int i = 0; i < kMaxSliceRounds; ++i) {
    const double rho = corr.rho_from_eta(rng.beta(hyper.a2, hyper.b2));
    if (support.contains(rho)) return rho;
  }
  throw NumericalError("prior draw for rho never landed inside the support");
}

LogDensity rho_log_conditional(const CorrelationModel& corr, std::vector<int> members,
                               double sigma2, const Eigen::MatrixXd& a_full, int n,
                               const HyperParams& hyper) {
  return [&corr, &a_full, &hyper, members = std::move(members), sigma2, n](double rho) {
    const double prior = rho_log_prior(corr, hyper, rho);
    if (!std::isfinite(prior)) return kNegInf;
    const BlockTerms t = corr.block_terms(members, rho, a_full);
    return -0.5 * n * t.logdet - 0.5 * t.trace / sigma2 + prior;
  };
}

SliceDraw slice_sample_rho(const LogDensity& log_target, double x0, double step, double lambda,
                           RhoSupport support, Rng& rng) {
  const double f0 = log_target(x0);
  if (!std::isfinite(f0)) throw NumericalError("slice sampler started where the target is zero");
  const double log_omega = f0 + std::log(rng.uniform());

  const double l = rng.uniform(x0 - 0.5 * step, x0 + 0.5 * step);
  const double s1 = 2.0 * std::abs(l - x0) + rng.exponential(lambda);

  double a = l - 0.5 * s1;
  double b = l + 0.5 * s1;
  if (!(support.lower < a && a < support.upper)) a = support.lower;
  if (!(support.lower < b && b < support.upper)) b = support.upper;

  for (int round = 0; round < kMaxSliceRounds; ++round) {
    const double x = rng.uniform(a, b);
    if (log_target(x) > log_omega) return {x, s1};
    if (x < x0) {
      a = std::max(a, x);
    } else {
      b = std::min(b, x);
    }
  }
  throw NumericalError("slice sampler exceeded the shrinkage cap");
}

void sample_rho_all(ChainState& state, const CorrelationModel& corr, const Eigen::MatrixXd& a_full,
                    int n, const HyperParams& hyper, double lambda, Rng& rng) {
  const auto members = state.assignment.members();
  const auto support = corr.support();
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto d = members[j].size();
    if (d == 0) {
      state.cov.rho[j] = sample_rho_prior(corr, hyper, rng);
      continue;
    }
    if (d == 1) {
      state.cov.rho[j] = 0.0;
      continue;
    }
    const auto target = rho_log_conditional(corr, members[j], state.cov.sigma2[j], a_full, n, hyper);
    double x0 = state.cov.rho[j];
    // a cluster that was a singleton carries rho = 0, which may sit outside
    // the prior support; restart it from a prior draw
    for (int tries = 0; !std::isfinite(target(x0)); ++tries) {
      if (tries == kMaxSliceRounds) throw NumericalError("no admissible starting value for rho");
      x0 = sample_rho_prior(corr, hyper, rng);
    }
    const auto draw = slice_sample_rho(target, x0, state.rho_step[j], lambda, support, rng);
    state.cov.rho[j] = draw.value;
    state.rho_step[j] = draw.step;
  }
}

BSampler::BSampler(const Dataset& data, double tau2) : m_(data.m()), p_(data.p()), tau2_(tau2) {
  const Eigen::MatrixXd g = data.covariates.transpose() * data.covariates;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite()) {
    throw NumericalError("eigendecomposition of X^T X failed");
  }
  q1_ = es.eigenvectors();
  lam1_ = es.eigenvalues().cwiseMax(0.0);
  yx_ = data.outcomes.transpose() * data.covariates;
}

std::vector<BSampler::BlockEigen> BSampler::decompose(const ClusterAssignment& assignment,
                                                      const ClusterCovParams& cov,
                                                      const CorrelationModel& corr) const {
  std::vector<BlockEigen> out;
  const auto members = assignment.members();
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].empty()) continue;
    BlockEigen be;
    be.members = members[j];
    const double rho = members[j].size() == 1 ? 0.0 : cov.rho[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr.corr_matrix(be.members, rho));
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite() ||
        es.eigenvalues().minCoeff() <= 0.0) {
      throw NumericalError("eigendecomposition of a covariance block failed");
    }
    be.vectors = es.eigenvectors();
    be.lam2 = (cov.sigma2[j] * es.eigenvalues().array()).inverse().matrix();
    out.push_back(std::move(be));
  }
  return out;
}

void BSampler::rotated_terms(const std::vector<BlockEigen>& blocks, Eigen::MatrixXd& t,
                             Eigen::MatrixXd& d) const {
  t.resize(m_, p_);
  d.resize(m_, p_);
  const double prior_precision = 1.0 / tau2_;
  Eigen::Index row = 0;
  for (const auto& be : blocks) {
    const auto size = static_cast<Eigen::Index>(be.members.size());
    Eigen::MatrixXd c(size, p_);
    for (Eigen::Index i = 0; i < size; ++i) c.row(i) = yx_.row(be.members[static_cast<std::size_t>(i)]);
    t.middleRows(row, size) = be.lam2.asDiagonal() * (be.vectors.transpose() * c) * q1_;
    for (Eigen::Index i = 0; i < size; ++i) {
      for (int q = 0; q < p_; ++q) {
        d(row + i, q) = 1.0 / std::sqrt(lam1_(q) * be.lam2(i) + prior_precision);
      }
    }
    row += size;
  }
}

Eigen::MatrixXd BSampler::unrotate(const std::vector<BlockEigen>& blocks,
                                   const Eigen::MatrixXd& z) const {
  Eigen::MatrixXd out(m_, p_);
  Eigen::Index row = 0;
  for (const auto& be : blocks) {
    const auto size = static_cast<Eigen::Index>(be.members.size());
    const Eigen::MatrixXd part = be.vectors * z.middleRows(row, size) * q1_.transpose();
    for (Eigen::Index i = 0; i < size; ++i) out.row(be.members[static_cast<std::size_t>(i)]) = part.row(i);
    row += size;
  }
  return out;
}

RegressionCoefficients BSampler::sample(const ClusterAssignment& assignment,
                                        const ClusterCovParams& cov, const CorrelationModel& corr,
                                        Rng& rng) const {
  const auto blocks = decompose(assignment, cov, corr);
  Eigen::MatrixXd t, d;
  rotated_terms(blocks, t, d);
  Eigen::MatrixXd nu(m_, p_);
  for (int q = 0; q < p_; ++q) {
    for (int k = 0; k < m_; ++k) nu(k, q) = rng.normal();
  }
  const Eigen::MatrixXd z = d.cwiseProduct(d.cwiseProduct(t) + nu);
  RegressionCoefficients out{unrotate(blocks, z)};
  if (!out.b.allFinite()) throw NumericalError("non-finite regression coefficient draw");
  return out;
}

Eigen::MatrixXd BSampler::mean(const ClusterAssignment& assignment, const ClusterCovParams& cov,
                               const CorrelationModel& corr) const {
  const auto blocks = decompose(assignment, cov, corr);
  Eigen::MatrixXd t, d;
  rotated_terms(blocks, t, d);
  return unrotate(blocks, d.cwiseProduct(d).cwiseProduct(t));
}

Eigen::MatrixXd BSampler::xi_dense(const ClusterAssignment& assignment,
                                   const ClusterCovParams& cov,
                                   const CorrelationModel& corr) const {
  const auto blocks = decompose(assignment, cov, corr);
  Eigen::MatrixXd t, d;
  rotated_terms(blocks, t, d);
  // W maps block-layout coordinates back to original rows
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m_, m_);
  Eigen::Index col = 0;
  for (const auto& be : blocks) {
    const auto size = static_cast<Eigen::Index>(be.members.size());
    for (Eigen::Index i = 0; i < size; ++i) {
      w.block(be.members[static_cast<std::size_t>(i)], col, 1, size) = be.vectors.row(i);
    }
    col += size;
  }
  const Eigen::Index mp = static_cast<Eigen::Index>(m_) * p_;
  Eigen::MatrixXd u(mp, mp);
  for (int q = 0; q < p_; ++q) {
    for (int q2 = 0; q2 < p_; ++q2) {
      u.block(static_cast<Eigen::Index>(q) * m_, static_cast<Eigen::Index>(q2) * m_, m_, m_) =
          q1_(q, q2) * w * d.col(q2).asDiagonal();
    }
  }
  return u * u.transpose();
}

}  // namespace covclust
