#include <doctest.h>

#include "covclust/chain.hpp"
#include "covclust/errors.hpp"
#include "covclust/posterior.hpp"
#include "covclust/simulate.hpp"
#include "oracles.hpp"

using namespace covclust;

namespace {

struct Conjugate {
  Dataset data;
  KernelSpec spec;
  HyperParams hyper;
};

// Two correlated coordinates in one cluster, intercept-only mean.
Conjugate conjugate_problem() {
  Conjugate c;
  c.spec.family = KernelFamily::GenAR1;
  c.spec.nu = 1.0;
  Eigen::MatrixXd loc(2, 1);
  loc << 1, 2;
  CorrelationModel corr(c.spec, loc, 2, 0.95);
  Rng rng(2024);
  const int n = 30;
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 1);
  RegressionCoefficients b{Eigen::MatrixXd(2, 1)};
  b.b << 0.5, -0.3;
  c.data.outcomes = gen_outcomes(corr, ClusterAssignment({0, 0}, 1), {{1.2}, {0.6}}, b, x, rng);
  c.data.covariates = x;
  c.data.locations = loc;
  c.hyper = HyperParams::defaults(2, 1);
  c.hyper.p0 = 0.5;
  return c;
}

// log p(sigma2, rho | Y) up to a constant with B integrated out.
double marginal_log_post(const Conjugate& c, double s2, double rho) {
  const int n = c.data.n();
  Eigen::Matrix2d g;
  g << 1, rho, rho, 1;
  const Eigen::Matrix2d sigma = s2 * g;
  const Eigen::Vector2d ybar = c.data.outcomes.colwise().mean().transpose();
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d r = c.data.outcomes.row(i).transpose() - ybar;
    s += r * r.transpose();
  }
  const Eigen::Matrix2d v = sigma / n + c.hyper.tau2 * Eigen::Matrix2d::Identity();
  const double a1 = c.hyper.a1, b1 = c.hyper.b1, a2 = c.hyper.a2, b2 = c.hyper.b2;
  return -0.5 * (n - 1) * std::log(sigma.determinant()) - 0.5 * (sigma.inverse() * s).trace() -
         0.5 * std::log(v.determinant()) - 0.5 * ybar.dot(v.inverse() * ybar) -
         (a1 + 1) * std::log(s2) - b1 / s2 + (a2 - 1) * std::log(rho) + (b2 - 1) * std::log1p(-rho);
}

}  // namespace

TEST_CASE("single-cluster chain matches the conjugate posterior") {
  const auto c = conjugate_problem();
  // quadrature on a grid in (log sigma2, rho)
  double z = 0.0, e_s2 = 0.0, e_rho = 0.0, top = -1e300;
  const int gs = 500, gr = 500;
  std::vector<double> lp(static_cast<std::size_t>(gs * gr));
  auto s2_at = [&](int i) { return std::exp(std::log(0.2) + (std::log(8.0) - std::log(0.2)) * (i + 0.5) / gs); };
  auto rho_at = [&](int k) { return 0.95 * (k + 0.5) / gr; };
  for (int i = 0; i < gs; ++i) {
    for (int k = 0; k < gr; ++k) {
      lp[static_cast<std::size_t>(i * gr + k)] = marginal_log_post(c, s2_at(i), rho_at(k)) + std::log(s2_at(i));
      top = std::max(top, lp[static_cast<std::size_t>(i * gr + k)]);
    }
  }
  for (int i = 0; i < gs; ++i) {
    for (int k = 0; k < gr; ++k) {
      const double w = std::exp(lp[static_cast<std::size_t>(i * gr + k)] - top);
      z += w;
      e_s2 += w * s2_at(i);
      e_rho += w * rho_at(k);
    }
  }
  e_s2 /= z;
  e_rho /= z;

  double sum_s2 = 0.0, sum_rho = 0.0;
  long count = 0;
  Eigen::Vector2d sum_b = Eigen::Vector2d::Zero();
  run_chain(c.data, c.hyper, c.spec, PhaseSchedule{0, 0, 60000}, 77,
            [&](const ChainState& s, const IterationReport& r) {
              CHECK_FALSE(r.htsm_accepted);
              if (r.iteration <= 1000) return;
              sum_s2 += s.cov.sigma2[0];
              sum_rho += s.cov.rho[0];
              sum_b += s.coef.b.col(0);
              ++count;
            });
  CHECK(sum_s2 / count == doctest::Approx(e_s2).epsilon(0.02));
  CHECK(std::abs(sum_rho / count - e_rho) < 0.02);
  // B given Sigma has mean shrunk towards zero only through tau2 = 1
  const Eigen::Vector2d ybar = c.data.outcomes.colwise().mean().transpose();
  CHECK((sum_b / count - ybar * c.data.n() / (c.data.n() + 1.0)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("initial state") {
  SimDesign d;
  d.m = 12;
  d.n = 10;
  d.clusters = 3;
  const auto sim = simulate(d);
  CorrelationModel corr(d.kernel, sim.data.locations, 12, 0.95);
  Rng rng(1);
  auto h = HyperParams::defaults(12, 4);
  const auto s = initialize_chain(sim.data, h, corr, rng);
  CHECK(s.assignment.labels() == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  CHECK(s.coef.b.isZero());
  CHECK(s.sticks.alpha == doctest::Approx(h.a0 / h.b0));
  CHECK(s.sticks.v.back() == 1.0);
  for (double r : s.cov.rho) CHECK(corr.support().contains(r));
  const auto singletons = initialize_chain(sim.data, HyperParams::defaults(12), corr, rng);
  CHECK(singletons.assignment.num_occupied() == 12);
}

TEST_CASE("chains are reproducible and canonical after every iteration") {
  SimDesign d;
  d.m = 12;
  d.n = 20;
  d.clusters = 3;
  d.kernel.family = KernelFamily::GenAR1;
  const auto sim = simulate(d);
  auto h = HyperParams::defaults(12, 6);
  auto collect = [&](std::uint64_t seed) {
    std::vector<std::string> out;
    run_chain(sim.data, h, d.kernel, PhaseSchedule{20, 20, 40}, seed, [&](const ChainState& s, const IterationReport& r) {
      const auto map = relabel_map(s.assignment);
      for (std::size_t j = 0; j < map.size(); ++j) CHECK(map[j] == static_cast<int>(j));
      CHECK(std::isfinite(r.log_likelihood));
      CHECK(r.clusters == s.assignment.num_occupied());
      std::string line;
      for (int z : s.assignment.labels()) line += std::to_string(z) + ",";
      line += std::to_string(s.cov.sigma2[0]) + "," + std::to_string(s.coef.b(0, 0));
      out.push_back(line);
    });
    return out;
  };
  const auto a = collect(5), b = collect(5), c = collect(6);
  CHECK(a.size() == 80);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("thinning and phases reach the sink") {
  SimDesign d;
  d.m = 6;
  d.n = 10;
  d.clusters = 2;
  const auto sim = simulate(d);
  ChainOptions o;
  o.thin = 3;
  std::vector<long> seen;
  std::vector<Phase> phases;
  run_chain(sim.data, HyperParams::defaults(6, 3), d.kernel, PhaseSchedule{3, 3, 6}, 1,
            [&](const ChainState&, const IterationReport& r) {
              seen.push_back(r.iteration);
              phases.push_back(r.phase);
            },
            o);
  CHECK(seen == std::vector<long>{3, 6, 9, 12});
  CHECK(phases == std::vector<Phase>{Phase::BurnIn1, Phase::BurnIn2, Phase::Sampling, Phase::Sampling});
}

TEST_CASE("chain failures carry the iteration") {
  SimDesign d;
  d.m = 4;
  d.n = 5;
  d.clusters = 2;
  auto sim = simulate(d);
  auto h = HyperParams::defaults(4, 2);
  CorrelationModel corr(d.kernel, std::nullopt, 4, 0.95);
  Rng rng(3);
  auto s = initialize_chain(sim.data, h, corr, rng);
  s.cov.sigma2[0] = std::nan("");
  try {
    run_chain(sim.data, h, corr, PhaseSchedule{1, 1, 1}, s, rng, {});
    FAIL("expected an abort");
  } catch (const ChainAbort& e) {
    CHECK(e.iteration() == 1);
  }
  auto bad = HyperParams::defaults(4, 3);
  Rng rng2(1);
  auto s2 = initialize_chain(sim.data, h, corr, rng2);
  CHECK_THROWS_AS(run_chain(sim.data, bad, corr, PhaseSchedule{1, 1, 1}, s2, rng2, {}), ConfigError);
}
