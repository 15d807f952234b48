#include <doctest.h>

#include "covclust/errors.hpp"
#include "covclust/posterior.hpp"
#include "covclust/simulate.hpp"
#include "oracles.hpp"

using namespace covclust;

namespace {

Snapshot snap(std::vector<int> z, long it = 1) {
  Snapshot s;
  s.iteration = it;
  s.z = std::move(z);
  const int j = s.clusters();
  s.sigma2.assign(static_cast<std::size_t>(j), 1.0);
  s.rho.assign(static_cast<std::size_t>(j), 0.5);
  return s;
}

}  // namespace

TEST_CASE("MAP partition is the empirical mode") {
  std::vector<Snapshot> s{snap({0, 0, 1}), snap({0, 0, 1}), snap({0, 1, 1})};
  const auto m = map_partition(s);
  CHECK(m.labels == std::vector<int>{0, 0, 1});
  CHECK(m.frequency == doctest::Approx(2.0 / 3.0));
  CHECK(m.count == 2);
  const auto one = map_partition(std::vector<Snapshot>{snap({0, 1, 0})});
  CHECK(one.frequency == 1.0);
  // tie: the partition seen first wins, reported in canonical labels
  CHECK(map_partition(std::vector<Snapshot>{snap({0, 1, 1}), snap({0, 0, 1})}).labels == std::vector<int>{1, 0, 0});
  CHECK(map_partition(std::vector<Snapshot>{snap({0, 0, 1}), snap({0, 1, 1})}).labels == std::vector<int>{0, 0, 1});
  // label permutations within a snapshot do not matter
  CHECK(map_partition(std::vector<Snapshot>{snap({1, 1, 0}), snap({0, 0, 1}), snap({0, 1, 1})}).frequency ==
        doctest::Approx(2.0 / 3.0));
}

TEST_CASE("posterior similarity") {
  std::vector<Snapshot> s{snap({0, 0, 1}), snap({0, 1, 1})};
  const auto sim = similarity_matrix(s);
  CHECK(sim(0, 1) == 0.5);
  CHECK(sim(1, 2) == 0.5);
  CHECK(sim(0, 2) == 0.0);
  CHECK(sim.diagonal().isOnes());
  CHECK((sim - sim.transpose()).isZero());
  const auto same = similarity_matrix(std::vector<Snapshot>{snap({0, 1, 0}), snap({1, 0, 1})});
  Eigen::Matrix3d want;
  want << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  CHECK(same == want);
  CHECK(similar_pairs(sim, 0.5) == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(similar_pairs(sim, 0.9).empty());
}

TEST_CASE("credible partition set") {
  std::vector<Snapshot> s;
  for (int i = 0; i < 6; ++i) s.push_back(snap({0, 0, 1}));
  for (int i = 0; i < 3; ++i) s.push_back(snap({0, 1, 1}));
  s.push_back(snap({0, 1, 2}));
  const auto set = credible_partition_set(s, 0.85);
  REQUIRE(set.size() == 2);
  CHECK(set[0].frequency == doctest::Approx(0.6));
  CHECK(contains_partition(set, std::vector<int>{1, 0, 0}));
  CHECK_FALSE(contains_partition(set, std::vector<int>{0, 1, 2}));
  CHECK(credible_partition_set(s, 0.95).size() == 3);
}

TEST_CASE("type-7 quantiles") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({5}, 0.9) == 5.0);
  CHECK(quantile({3, 1, 2}, 0.0) == 1.0);
  CHECK(quantile({3, 1, 2}, 1.0) == 3.0);
}

TEST_CASE("credible intervals: constants and normal draws") {
  std::vector<Snapshot> s;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto x = snap({0, 0, 1});
    x.sigma2 = {2.0, rng.normal()};
    x.rho = {0.3, 0.0};
    x.b = Eigen::MatrixXd::Constant(3, 1, 0.25);
    s.push_back(x);
  }
  TruthBundle truth;
  truth.assignment = ClusterAssignment({0, 0, 1}, 3);
  truth.cov = {{2.0, 0.0}, {0.3, 0.0}};
  truth.coef.b = Eigen::MatrixXd::Constant(3, 1, 0.5);
  const auto t = credible_intervals(s, 0.95, true, &truth);
  CHECK(t.map_matches_truth);
  CHECK(t.draws == 10000);
  int rho_rows = 0;
  for (const auto& r : t.rows) {
    if (r.kind == ParamKind::Rho) {
      ++rho_rows;
      CHECK(r.cluster == 0);
      CHECK(r.lower == 0.3);
      CHECK(r.upper == 0.3);
      CHECK(*r.covered);
    }
    if (r.kind == ParamKind::Sigma2 && r.cluster == 1) {
      // quantile standard error at n = 1e4 is about 0.027
      CHECK(std::abs(r.lower + 1.96) < 0.11);
      CHECK(std::abs(r.upper - 1.96) < 0.11);
      CHECK(*r.covered);
    }
    if (r.kind == ParamKind::Coefficient) CHECK_FALSE(*r.covered);
  }
  CHECK(rho_rows == 1);
  const auto c = coverage(t);
  CHECK(c.rho == 1.0);
  CHECK(c.sigma2 == 1.0);
  CHECK(c.coefficient == 0.0);
  CHECK(c.n_coefficient == 3);
}

TEST_CASE("credible intervals nest across levels") {
  std::vector<Snapshot> s;
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    auto x = snap({0, 0, 1});
    x.sigma2 = {rng.gamma(2, 1), rng.gamma(3, 1)};
    x.rho = {rng.uniform(), 0.0};
    s.push_back(x);
  }
  const auto narrow = credible_intervals(s, 0.9, true);
  const auto wide = credible_intervals(s, 0.95, true);
  REQUIRE(narrow.rows.size() == wide.rows.size());
  for (std::size_t i = 0; i < narrow.rows.size(); ++i) {
    CHECK(narrow.rows[i].lower >= wide.rows[i].lower);
    CHECK(narrow.rows[i].upper <= wide.rows[i].upper);
    CHECK(wide.rows[i].lower <= wide.rows[i].upper);
  }
}

TEST_CASE("conditioning on the MAP drops other partitions") {
  std::vector<Snapshot> s{snap({0, 0, 1}), snap({0, 0, 1}), snap({0, 1, 1})};
  s[0].sigma2 = {1.0, 1.0};
  s[1].sigma2 = {3.0, 1.0};
  s[2].sigma2 = {100.0, 1.0};
  const auto t = credible_intervals(s, 0.95, true);
  CHECK(t.draws == 2);
  CHECK(t.rows.front().kind == ParamKind::Rho);
  for (const auto& r : t.rows) {
    if (r.kind == ParamKind::Sigma2 && r.cluster == 0) CHECK(r.upper <= 3.0);
  }
  CHECK_THROWS_AS(credible_intervals(s, 1.5, true), DomainError);
}

TEST_CASE("coverage aggregation") {
  CoverageSummary a, b;
  a.rho = 1.0;
  b.rho = 0.9;
  a.sigma2 = b.sigma2 = 1.0;
  a.coefficient = 0.0;
  b.coefficient = 1.0;
  const std::vector<CoverageSummary> reps{a, b};
  const auto rows = coverage_table(reps);
  CHECK(rows[0].kind == ParamKind::Rho);
  CHECK(rows[0].mean == doctest::Approx(0.95));
  CHECK(rows[0].sd == doctest::Approx(0.0707).epsilon(0.001));
  CHECK(rows[1].mean == 1.0);
  CHECK(rows[1].sd == 0.0);
  CHECK(rows[2].mean == 0.5);
  CHECK_THROWS_AS(coverage_table(std::vector<CoverageSummary>{a}), DomainError);
}

TEST_CASE("cluster count trace") {
  std::vector<Snapshot> s{snap({0, 0, 1}, 1), snap({0, 1, 2}, 2), snap({0, 0, 0}, 3)};
  s[2].phase = Phase::BurnIn2;
  const auto tr = cluster_count_trace(s);
  REQUIRE(tr.size() == 3);
  CHECK(tr[0].clusters == 2);
  CHECK(tr[1].clusters == 3);
  CHECK(tr[2].clusters == 1);
  CHECK(tr[2].phase == Phase::BurnIn2);
  CHECK(tr[1].iteration == 2);
  std::vector<Snapshot> window{snap({0, 0}, 1), snap({0, 0}, 2)};
  window[0].phase = Phase::BurnIn1;
  CHECK(sampling_window(window).size() == 1);
}

TEST_CASE("autocorrelation") {
  Rng rng(3);
  const int n = 100000;
  std::vector<double> noise(n), ar(n);
  for (int i = 0; i < n; ++i) noise[static_cast<std::size_t>(i)] = rng.normal();
  ar[0] = noise[0];
  for (int i = 1; i < n; ++i) ar[static_cast<std::size_t>(i)] = 0.5 * ar[static_cast<std::size_t>(i - 1)] + noise[static_cast<std::size_t>(i)];
  const auto w = autocorrelation(noise, 5);
  CHECK(w[0] == doctest::Approx(1.0));
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(w[static_cast<std::size_t>(k)]) < 0.01);
  const auto a = autocorrelation(ar, 2);
  CHECK(std::abs(a[1] - 0.5) < 0.02);
  CHECK(std::abs(a[2] - 0.25) < 0.02);
  CHECK_THROWS_AS(autocorrelation(std::vector<double>(10, 1.0), 2), DomainError);
  CHECK_THROWS_AS(autocorrelation(std::vector<double>{1, 2}, 2), DomainError);
}

TEST_CASE("snapshots keep occupied clusters only") {
  ChainState st;
  st.assignment = ClusterAssignment({0, 0, 1}, 4);
  st.cov = {{1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4}};
  st.coef.b = Eigen::MatrixXd::Ones(3, 2);
  st.sticks.alpha = 2.5;
  st.iteration = 7;
  st.phase = Phase::Sampling;
  const auto s = make_snapshot(st, true, -3.0);
  CHECK(s.sigma2 == std::vector<double>{1, 2});
  CHECK(s.rho == std::vector<double>{0.1, 0.2});
  CHECK(s.b.rows() == 3);
  CHECK(s.log_likelihood == -3.0);
  CHECK(make_snapshot(st, false).b.size() == 0);
}
