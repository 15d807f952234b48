#include <doctest.h>

#include "covclust/errors.hpp"
#include "covclust/simulate.hpp"
#include "oracles.hpp"

using namespace covclust;

TEST_CASE("equal partition sizes") {
  SimDesign d;
  d.m = 10;
  d.clusters = 5;
  Rng rng(1);
  const auto a = gen_partition(d, rng);
  const auto c = a.counts();
  for (int j = 0; j < 5; ++j) CHECK(c[static_cast<std::size_t>(j)] == 2);
  CHECK(a.num_occupied() == 5);
  CHECK(a.max_clusters() == 10);
  d.clusters = 3;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("Chinese-restaurant partitions have the expected number of tables") {
  SimDesign d;
  d.m = 500;
  d.partition = PartitionKind::DirichletProcess;
  d.alpha_true = 6.0;
  double expected = 0.0;
  for (int i = 1; i <= 500; ++i) expected += 6.0 / (6.0 + i - 1.0);
  Rng rng(2);
  double mean = 0.0;
  for (int r = 0; r < 1000; ++r) mean += gen_partition(d, rng).num_occupied();
  mean /= 1000.0;
  CHECK(mean == doctest::Approx(expected).epsilon(0.05));

  d.alpha_true = 1e-12;
  d.m = 50;
  CHECK(gen_partition(d, rng).num_occupied() == 1);
}

TEST_CASE("generated partitions are canonical") {
  SimDesign d;
  d.m = 60;
  d.partition = PartitionKind::DirichletProcess;
  Rng rng(3);
  for (int r = 0; r < 20; ++r) {
    const auto a = gen_partition(d, rng);
    const auto map = relabel_map(a);
    for (std::size_t j = 0; j < map.size(); ++j) CHECK(map[j] == static_cast<int>(j));
  }
}

TEST_CASE("covariate design") {
  Rng rng(4);
  const auto x = gen_covariates(100000, rng);
  const Eigen::VectorXd mean = x.colwise().mean();
  CHECK(std::abs(mean(0) - 1.0) < 1e-15);
  CHECK(std::abs(mean(1) - 0.5) < 0.01);
  CHECK(std::abs(mean(2) - 0.7) < 0.01);
  CHECK(std::abs(mean(3)) < 0.01);
  CHECK(std::abs(mean(4)) < 0.01);
  CHECK((x.col(4) - x.col(1).cwiseProduct(x.col(3))).isZero(0.0));
  CHECK((x.col(0).array() == 1.0).all());
}

TEST_CASE("locations") {
  KernelSpec ar;
  ar.family = KernelFamily::GenAR1;
  const auto l = gen_locations(3, ar);
  REQUIRE(l.has_value());
  CHECK(l->col(0) == Eigen::Vector3d(1, 2, 3));
  KernelSpec mat;
  mat.family = KernelFamily::Matern32;
  const auto g = gen_locations(4, mat);
  REQUIRE(g.has_value());
  CHECK(g->rows() == 4);
  CHECK(g->cols() == 2);
  CHECK((g->row(0) - g->row(1)).norm() == doctest::Approx(1.0));
  CHECK((g->row(0) - g->row(3)).norm() == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(gen_locations(4, KernelSpec{}).has_value());
  CorrelationModel c(ar, l, 3, 0.95);
  CHECK(c.correlation(0, 1, 0.7) == doctest::Approx(0.7));
}

TEST_CASE("parameter grids") {
  const auto r = rho_grid();
  const auto s = sigma2_grid();
  CHECK(r.front() == doctest::Approx(0.4));
  CHECK(r.back() == doctest::Approx(0.9));
  CHECK(r.size() == 11);
  CHECK(s.front() == doctest::Approx(0.95));
  CHECK(s.back() == doctest::Approx(1.5));
  CHECK(s.size() == 12);
  SimDesign d;
  d.m = 20;
  d.clusters = 4;
  Rng rng(5);
  auto a = gen_partition(d, rng);
  const auto p = gen_params(d, a, rng);
  CHECK(p.rho.size() == 4);
  for (double x : p.rho) CHECK(std::find_if(r.begin(), r.end(), [&](double g) { return std::abs(g - x) < 1e-12; }) != r.end());
  d.grid = ParamGrid::Homogeneous;
  const auto h = gen_params(d, a, rng);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(h.rho[j] == 0.7);
    CHECK(h.sigma2[j] == 1.1);
  }
  ClusterAssignment single({0, 1, 1}, 3);
  d.m = 3;
  const auto sp = gen_params(d, single, rng);
  CHECK(sp.rho[0] == 0.0);
  CHECK(sp.rho[1] == 0.7);
}

TEST_CASE("outcome covariance and mean") {
  KernelSpec cs;
  CorrelationModel c(cs, std::nullopt, 3, 0.95);
  Rng rng(6);
  const int n = 100000;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 1);
  RegressionCoefficients b{Eigen::MatrixXd::Zero(3, 1)};
  const auto y = gen_outcomes(c, ClusterAssignment({0, 0, 0}, 1), {{1.0}, {0.6}}, b, x, rng);
  const Eigen::MatrixXd cov = y.transpose() * y / n;
  for (int a = 0; a < 3; ++a) {
    for (int k = 0; k < 3; ++k) CHECK(std::abs(cov(a, k) - (a == k ? 1.0 : 0.6)) < 0.02);
  }
  RegressionCoefficients b2{Eigen::MatrixXd(3, 1)};
  b2.b << 1.0, -2.0, 0.5;
  const auto y2 = gen_outcomes(c, ClusterAssignment({0, 1, 2}, 3), {{1, 1, 1}, {0, 0, 0}}, b2, x, rng);
  const Eigen::VectorXd resid_mean = (y2 - x * b2.b.transpose()).colwise().mean();
  CHECK(resid_mean.cwiseAbs().maxCoeff() < 0.02);
  const Eigen::MatrixXd c2 = (y2.rowwise() - y2.colwise().mean()).transpose() * (y2.rowwise() - y2.colwise().mean()) / n;
  CHECK(std::abs(c2(0, 1)) < 0.02);
}

TEST_CASE("simulation is seed-deterministic and the truth is identifiable") {
  SimDesign d;
  d.m = 30;
  d.n = 30;
  d.clusters = 5;
  d.kernel.family = KernelFamily::GenAR1;
  const auto a = simulate(d), b = simulate(d);
  CHECK(a.data.outcomes == b.data.outcomes);
  CHECK(a.truth.assignment == b.truth.assignment);
  d.seed = 2;
  CHECK(simulate(d).data.outcomes != a.data.outcomes);

  const CorrelationModel corr(d.kernel, a.data.locations, d.m, 0.95);
  ChainState truth;
  truth.assignment = a.truth.assignment;
  truth.cov = a.truth.cov;
  truth.cov.sigma2.resize(30, 1.0);
  truth.cov.rho.resize(30, 0.5);
  truth.coef = a.truth.coef;
  const double base = log_likelihood(corr, truth, a.data);
  Rng rng(7);
  int better = 0;
  for (int t = 0; t < 100; ++t) {
    ChainState p = truth;
    auto z = p.assignment.labels();
    const int moves = rng.uniform_int(1, 5);
    for (int i = 0; i < moves; ++i) z[static_cast<std::size_t>(rng.uniform_int(0, 29))] = rng.uniform_int(0, 5);
    p.assignment = ClusterAssignment(z, 30);
    if (p.assignment == truth.assignment) {
      ++better;
      continue;
    }
    better += base > log_likelihood(corr, p, a.data);
  }
  CHECK(better >= 95);
}
