#include "covclust/kernels.hpp"

#include <cmath>
#include <numbers>

#include "covclust/errors.hpp"

namespace covclust {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::CompoundSymmetry: return "cs";
    case KernelFamily::GenAR1: return "ar1";
    case KernelFamily::Matern32: return "matern32";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& text) {
  if (text == "cs") return KernelFamily::CompoundSymmetry;
  if (text == "ar1") return KernelFamily::GenAR1;
  if (text == "matern32") return KernelFamily::Matern32;
  throw ConfigError("unknown kernel '" + text + "' (expected cs, ar1 or matern32)");
}

void KernelSpec::validate() const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("kernel nu must be positive");
  if (!(distance_scale > 0.0) || !std::isfinite(distance_scale)) {
    throw ConfigError("kernel distance_scale must be positive");
  }
}

CorrelationModel::CorrelationModel(KernelSpec spec, std::optional<Eigen::MatrixXd> locations,
                                   int m, double rho_upper)
    : spec_(spec), locations_(std::move(locations)), m_(m), rho_upper_(rho_upper) {
  spec_.validate();
  if (spec_.needs_locations()) {
    if (!locations_) throw DataError("kernel " + to_string(spec_.family) + " requires locations");
    if (locations_->rows() != m_) throw DataError("locations must have one row per outcome");
  }
}

RhoSupport CorrelationModel::support() const {
  if (spec_.family == KernelFamily::CompoundSymmetry) {
    return {m_ > 1 ? -1.0 / (m_ - 1) : 0.0, rho_upper_};
  }
  return {0.0, rho_upper_};
}

double CorrelationModel::eta(double rho) const {
  if (spec_.family == KernelFamily::CompoundSymmetry) {
    return (m_ - 1.0) * rho / m_ + 1.0 / m_;
  }
  return rho;
}

double CorrelationModel::rho_from_eta(double eta) const {
  if (spec_.family == KernelFamily::CompoundSymmetry) {
    return (m_ * eta - 1.0) / (m_ - 1.0);
  }
  return eta;
}

double CorrelationModel::log_eta_jacobian() const {
  if (spec_.family == KernelFamily::CompoundSymmetry) {
    return std::log((m_ - 1.0) / m_);
  }
  return 0.0;
}

double CorrelationModel::scaled_distance(int a, int b) const {
  if (!locations_) return std::abs(static_cast<double>(a - b)) / spec_.distance_scale;
  return (locations_->row(a) - locations_->row(b)).norm() / spec_.distance_scale;
}

double CorrelationModel::correlation(int a, int b, double rho) const {
  switch (spec_.family) {
    case KernelFamily::CompoundSymmetry:
      return rho;
    case KernelFamily::GenAR1: {
      if (rho == 0.0) return 0.0;
      return std::pow(rho, std::pow(scaled_distance(a, b), spec_.nu));
    }
    case KernelFamily::Matern32: {
      if (rho == 0.0) return 0.0;
      const double r = std::numbers::sqrt3 * scaled_distance(a, b) / rho;
      return (1.0 + r) * std::exp(-r);
    }
  }
  return 0.0;
}

void CorrelationModel::check_rho(double rho) const {
  if (rho == 0.0) return;
  if (!support().contains(rho) || !std::isfinite(rho)) {
    throw DomainError("rho = " + std::to_string(rho) + " outside the kernel support");
  }
}

Eigen::MatrixXd CorrelationModel::corr_matrix(std::span<const int> members, double rho) const {
  check_rho(rho);
  const auto d = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = r + 1; c < d; ++c) {
      const double v = correlation(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)], rho);
      g(r, c) = v;
      g(c, r) = v;
    }
  }
  return g;
}

namespace {

// Gamma = (1 - rho) I + rho 1 1^T.
double cs_logdet(int d, double rho) {
  return (d - 1) * std::log1p(-rho) + std::log1p((d - 1) * rho);
}

// tr(A Gamma^{-1}) with Gamma^{-1} = [I - rho / (1 + (d-1) rho) 1 1^T] / (1 - rho).
double cs_trace(int d, double rho, double trace_a, double sum_a) {
  return (trace_a - rho / (1.0 + (d - 1) * rho) * sum_a) / (1.0 - rho);
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization of a correlation block failed");
  }
  return llt;
}

double llt_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double llt_trace(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& a_block) {
  return llt.solve(a_block).trace();
}

}  // namespace

double CorrelationModel::block_logdet(std::span<const int> members, double rho) const {
  check_rho(rho);
  const int d = static_cast<int>(members.size());
  if (d <= 1 || rho == 0.0) return 0.0;
  if (spec_.family == KernelFamily::CompoundSymmetry) return cs_logdet(d, rho);
  return llt_logdet(factor(corr_matrix(members, rho)));
}

double CorrelationModel::block_trace(std::span<const int> members, double rho,
                                     const Eigen::MatrixXd& a_block) const {
  check_rho(rho);
  const int d = static_cast<int>(members.size());
  if (d == 1 || rho == 0.0) return a_block.trace();
  if (spec_.family == KernelFamily::CompoundSymmetry) {
    return cs_trace(d, rho, a_block.trace(), a_block.sum());
  }
  return llt_trace(factor(corr_matrix(members, rho)), a_block);
}

BlockTerms CorrelationModel::block_terms(std::span<const int> members, double rho,
                                         const Eigen::MatrixXd& a_full) const {
  check_rho(rho);
  BlockTerms t;
  t.size = static_cast<int>(members.size());
  if (t.size == 0) return t;
  if (t.size == 1) {
    t.trace = a_full(members[0], members[0]);
    return t;
  }
  if (spec_.family == KernelFamily::CompoundSymmetry || rho == 0.0) {
    double trace_a = 0.0, sum_a = 0.0;
    for (int r : members) {
      trace_a += a_full(r, r);
      for (int c : members) sum_a += a_full(r, c);
    }
    if (rho == 0.0) {
      t.trace = trace_a;
      return t;
    }
    t.logdet = cs_logdet(t.size, rho);
    t.trace = cs_trace(t.size, rho, trace_a, sum_a);
    return t;
  }
  const auto d = static_cast<Eigen::Index>(t.size);
  Eigen::MatrixXd a_block(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) a_block(r, c) = a_full(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)]);
  }
  const auto llt = factor(corr_matrix(members, rho));
  t.logdet = llt_logdet(llt);
  t.trace = llt_trace(llt, a_block);
  return t;
}

double block_log_likelihood(const BlockTerms& terms, double sigma2, int n) {
  if (terms.size == 0) return 0.0;
  const double d = terms.size;
  return -0.5 * n * (d * std::log(sigma2) + terms.logdet) - 0.5 * terms.trace / sigma2 -
         0.5 * n * d * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd residual_matrix(const Dataset& data, const RegressionCoefficients& coef) {
  return data.outcomes - data.covariates * coef.b.transpose();
}

Eigen::MatrixXd residual_crossproduct(const Dataset& data, const RegressionCoefficients& coef) {
  const Eigen::MatrixXd r = residual_matrix(data, coef);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r.cols(), r.cols());
  a.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose());
  return a.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd residual_crossproduct(const Dataset& data, const RegressionCoefficients& coef,
                                      const Permutation& perm) {
  const Eigen::MatrixXd a = residual_crossproduct(data, coef);
  const auto m = static_cast<Eigen::Index>(perm.order.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = a(perm.order[static_cast<std::size_t>(r)], perm.order[static_cast<std::size_t>(c)]);
  }
  return out;
}

BlockQuadratics block_quadratics(const CorrelationModel& corr, const ClusterAssignment& assignment,
                                 const ClusterCovParams& cov, const Eigen::MatrixXd& a_full) {
  const auto members = assignment.members();
  BlockQuadratics q;
  q.blocks.resize(static_cast<std::size_t>(assignment.num_clusters()));
  for (std::size_t j = 0; j < q.blocks.size(); ++j) {
    if (!members[j].empty()) q.blocks[j] = corr.block_terms(members[j], cov.rho[j], a_full);
  }
  return q;
}

double log_likelihood(const BlockQuadratics& blocks, const ClusterCovParams& cov, int n) {
  double total = 0.0;
  for (std::size_t j = 0; j < blocks.blocks.size(); ++j) {
    total += block_log_likelihood(blocks.blocks[j], cov.sigma2[j], n);
  }
  return total;
}

double log_likelihood(const CorrelationModel& corr, const ChainState& state, const Dataset& data) {
  const Eigen::MatrixXd a = residual_crossproduct(data, state.coef);
  return log_likelihood(block_quadratics(corr, state.assignment, state.cov, a), state.cov,
                        data.n());
}

}  // namespace covclust
