#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covclust/model.hpp"
#include "covclust/simulate.hpp"

namespace covclust {

/// One stored iteration. sigma2 and rho cover the occupied labels 0..J-1.
struct Snapshot {
  long iteration = 0;
  Phase phase = Phase::Sampling;
  std::vector<int> z;
  double alpha = 0.0;
  std::vector<double> sigma2;
  std::vector<double> rho;
  Eigen::MatrixXd b;  // may be empty when coefficients are not stored
  double log_likelihood = 0.0;

  int clusters() const;
};

Snapshot make_snapshot(const ChainState& state, bool store_b, double log_likelihood = 0.0);

/// Snapshots whose phase is Sampling.
std::vector<Snapshot> sampling_window(std::span<const Snapshot> samples);

struct PartitionEstimate {
  std::vector<int> labels;  // canonical labels
  double frequency = 0.0;
  long count = 0;
};

/// Empirical mode of the canonically relabeled partitions; ties go to the
/// partition seen first.
PartitionEstimate map_partition(std::span<const Snapshot> samples);

/// Fraction of snapshots in which each pair shares a cluster.
Eigen::MatrixXd similarity_matrix(std::span<const Snapshot> samples);

/// Pairs (l, k), l < k, with similarity >= threshold.
std::vector<std::pair<int, int>> similar_pairs(const Eigen::MatrixXd& similarity, double threshold);

/// Partitions by decreasing frequency until the cumulative mass reaches
/// `level`.
std::vector<PartitionEstimate> credible_partition_set(std::span<const Snapshot> samples, double level);
bool contains_partition(const std::vector<PartitionEstimate>& set, std::span<const int> z);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double prob);

enum class ParamKind { Rho, Sigma2, Coefficient };
std::string to_string(ParamKind kind);

struct CredibleInterval {
  ParamKind kind = ParamKind::Rho;
  int cluster = -1;  // canonical MAP label for rho and sigma2
  int row = -1;      // outcome index for coefficients
  int col = -1;      // covariate index for coefficients
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> truth;
  std::optional<bool> covered;
};

struct IntervalTable {
  double level = 0.95;
  PartitionEstimate map;
  long draws = 0;  // snapshots that entered the intervals
  bool map_matches_truth = false;
  std::vector<CredibleInterval> rows;
};

/// Equal-tailed intervals for rho (clusters with two or more members),
/// sigma2 and B. With `condition_on_map` only snapshots whose partition
/// equals the MAP enter. Truth clusters are matched by exact member sets.
IntervalTable credible_intervals(std::span<const Snapshot> samples, double level,
                                 bool condition_on_map, const TruthBundle* truth = nullptr);

struct CoverageSummary {
  double rho = 0.0, sigma2 = 0.0, coefficient = 0.0;
  int n_rho = 0, n_sigma2 = 0, n_coefficient = 0;
  bool map_matches_truth = false;
};

/// Fraction of intervals covering the truth, per parameter group.
CoverageSummary coverage(const IntervalTable& table);

struct CoverageRow {
  ParamKind kind;
  double mean;
  double sd;
  int replicates;
};

/// Mean and sample standard deviation of per-replicate coverage. Needs at
/// least two replicates.
std::vector<CoverageRow> coverage_table(std::span<const CoverageSummary> replicates);

struct TracePoint {
  long iteration;
  Phase phase;
  int clusters;
};

std::vector<TracePoint> cluster_count_trace(std::span<const Snapshot> samples);

/// Sample autocorrelations at lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> series, int max_lag);

}  // namespace covclust
