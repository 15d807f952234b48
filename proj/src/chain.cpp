#include "covclust/chain.hpp"

#include <cmath>

#include "covclust/errors.hpp"
#include "covclust/param_samplers.hpp"

namespace covclust {

ChainState initialize_chain(const Dataset& data, const HyperParams& hyper,
                            const CorrelationModel& corr, Rng& rng) {
  const int m = data.m();
  const int k = hyper.k;
  ChainState s;

  std::vector<int> z(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    // z_m = ceil(m K / M) in 1-based terms
    z[static_cast<std::size_t>(i)] =
        k == m ? i : static_cast<int>((static_cast<long>(i + 1) * k + m - 1) / m) - 1;
  }
  s.assignment = ClusterAssignment(std::move(z), k);

  s.cov.sigma2.resize(static_cast<std::size_t>(k));
  s.cov.rho.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    s.cov.sigma2[static_cast<std::size_t>(j)] = rng.inv_gamma(hyper.a1, hyper.b1);
    s.cov.rho[static_cast<std::size_t>(j)] = sample_rho_prior(corr, hyper, rng);
  }
  const auto support = corr.support();
  s.rho_step.assign(static_cast<std::size_t>(k), support.upper - support.lower);

  s.sticks.alpha = hyper.a0 / hyper.b0;
  s.sticks.v.assign(static_cast<std::size_t>(k), 1.0);
  for (int j = 0; j + 1 < k; ++j) s.sticks.v[static_cast<std::size_t>(j)] = rng.beta(1.0, s.sticks.alpha);
  s.sticks.w = stick_weights(s.sticks.v);

  s.coef.b = Eigen::MatrixXd::Zero(m, data.p());
  relabel(s);
  return s;
}

namespace {

void iterate(const Dataset& data, const HyperParams& hyper, const CorrelationModel& corr,
             const BSampler& bsampler, Phase phase, const ChainOptions& options, ChainState& s,
             Eigen::MatrixXd& a_full, Rng& rng, IterationReport& report) {
  const LikelihoodContext ctx{corr, a_full, data.n()};
  s.phase = phase;

  if (phase == Phase::BurnIn1 || options.walker_all_phases) {
    walker_sweep(s, ctx, hyper.walker_step, rng);
    relabel(s);
  }
  const auto mode = phase == Phase::BurnIn1 ? SplitMode::Head : SplitMode::Tail;
  const auto outcome = htsm_step(s, ctx, hyper, mode, rng);
  relabel(s);
  report.htsm_attempted = outcome.attempted;
  report.htsm_accepted = outcome.accepted;
  report.htsm_kind = outcome.kind;
  if (outcome.accepted) ++report.accepted_total;

  s.sticks.v = sample_v(s.assignment, s.sticks.alpha, rng);
  s.sticks.w = stick_weights(s.sticks.v);

  const double lambda = phase == Phase::Sampling ? hyper.lambda_sampling : hyper.lambda_burnin;
  sample_rho_all(s, corr, a_full, data.n(), hyper, lambda, rng);

  const auto blocks = block_quadratics(corr, s.assignment, s.cov, a_full);
  s.cov.sigma2 = sample_sigma2(blocks, hyper, data.n(), rng);
  s.sticks.alpha = sample_alpha(s.sticks.v, hyper, rng);

  s.coef = bsampler.sample(s.assignment, s.cov, corr, rng);
  a_full = residual_crossproduct(data, s.coef);

  report.clusters = s.assignment.num_occupied();
  report.log_likelihood =
      log_likelihood(block_quadratics(corr, s.assignment, s.cov, a_full), s.cov, data.n());
  if (!std::isfinite(report.log_likelihood)) {
    throw NumericalError("log-likelihood became non-finite");
  }
}

}  // namespace

void run_chain(const Dataset& data, const HyperParams& hyper, const CorrelationModel& corr,
               const PhaseSchedule& schedule, ChainState& state, Rng& rng,
               const SnapshotSink& sink, const ChainOptions& options) {
  hyper.validate();
  schedule.validate();
  if (options.thin < 1) throw ConfigError("thin must be at least 1");
  if (state.assignment.max_clusters() != hyper.k) throw ConfigError("state K does not match hyperparameters");

  const BSampler bsampler(data, hyper.tau2);
  Eigen::MatrixXd a_full = residual_crossproduct(data, state.coef);
  IterationReport report;
  const long total = schedule.total();
  for (long t = state.iteration + 1; t <= total; ++t) {
    try {
      iterate(data, hyper, corr, bsampler, schedule.phase_of(t), options, state, a_full, rng, report);
    } catch (const ChainAbort&) {
      throw;
    } catch (const std::exception& e) {
      throw ChainAbort(t, e.what());
    }
    state.iteration = t;
    report.iteration = t;
    report.phase = state.phase;
    if (sink && t % options.thin == 0) sink(state, report);
  }
}

void run_chain(const Dataset& data, const HyperParams& hyper, const KernelSpec& kernel,
               const PhaseSchedule& schedule, std::uint64_t seed, const SnapshotSink& sink,
               const ChainOptions& options) {
  hyper.validate();
  data.validate(kernel.needs_locations());
  const CorrelationModel corr(kernel, data.locations, data.m(), hyper.rho_upper);
  Rng rng(seed);
  ChainState state = initialize_chain(data, hyper, corr, rng);
  run_chain(data, hyper, corr, schedule, state, rng, sink, options);
}

}  // namespace covclust
