#include "covclust/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "covclust/errors.hpp"

namespace covclust {

int Snapshot::clusters() const {
  return z.empty() ? 0 : *std::max_element(z.begin(), z.end()) + 1;
}

Snapshot make_snapshot(const ChainState& state, bool store_b, double log_likelihood) {
  Snapshot s;
  s.iteration = state.iteration;
  s.phase = state.phase;
  s.z = state.assignment.labels();
  s.alpha = state.sticks.alpha;
  const auto j = static_cast<std::size_t>(state.assignment.num_clusters());
  s.sigma2.assign(state.cov.sigma2.begin(), state.cov.sigma2.begin() + static_cast<long>(j));
  s.rho.assign(state.cov.rho.begin(), state.cov.rho.begin() + static_cast<long>(j));
  if (store_b) s.b = state.coef.b;
  s.log_likelihood = log_likelihood;
  return s;
}

std::vector<Snapshot> sampling_window(std::span<const Snapshot> samples) {
  std::vector<Snapshot> out;
  for (const auto& s : samples) {
    if (s.phase == Phase::Sampling) out.push_back(s);
  }
  return out;
}

namespace {

struct ModeEntry {
  long count = 0;
  std::size_t first = 0;
};

std::vector<PartitionEstimate> ranked_partitions(std::span<const Snapshot> samples) {
  if (samples.empty()) throw DomainError("no snapshots in the summary window");
  std::map<std::vector<int>, ModeEntry> counts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [it, inserted] = counts.try_emplace(canonical_labels(samples[i].z));
    if (inserted) it->second.first = i;
    ++it->second.count;
  }
  std::vector<std::pair<const std::vector<int>*, ModeEntry>> ranked;
  for (const auto& [labels, entry] : counts) ranked.emplace_back(&labels, entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first < b.second.first;
  });
  std::vector<PartitionEstimate> out;
  const double total = static_cast<double>(samples.size());
  for (const auto& [labels, entry] : ranked) {
    out.push_back({*labels, static_cast<double>(entry.count) / total, entry.count});
  }
  return out;
}

}  // namespace

PartitionEstimate map_partition(std::span<const Snapshot> samples) {
  return ranked_partitions(samples).front();
}

Eigen::MatrixXd similarity_matrix(std::span<const Snapshot> samples) {
  if (samples.empty()) throw DomainError("no snapshots in the summary window");
  const auto m = static_cast<Eigen::Index>(samples.front().z.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  for (const auto& snap : samples) {
    if (static_cast<Eigen::Index>(snap.z.size()) != m) throw DataError("snapshots differ in M");
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a; b < m; ++b) {
        if (snap.z[static_cast<std::size_t>(a)] == snap.z[static_cast<std::size_t>(b)]) s(a, b) += 1.0;
      }
    }
  }
  s /= static_cast<double>(samples.size());
  s.triangularView<Eigen::StrictlyLower>() = s.transpose();
  return s;
}

std::vector<std::pair<int, int>> similar_pairs(const Eigen::MatrixXd& similarity, double threshold) {
  std::vector<std::pair<int, int>> out;
  for (Eigen::Index a = 0; a < similarity.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < similarity.cols(); ++b) {
      if (similarity(a, b) >= threshold) out.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  return out;
}

std::vector<PartitionEstimate> credible_partition_set(std::span<const Snapshot> samples, double level) {
  if (!(level > 0.0 && level <= 1.0)) throw DomainError("credible level must lie in (0, 1]");
  auto ranked = ranked_partitions(samples);
  std::vector<PartitionEstimate> out;
  double cumulative = 0.0;
  for (auto& p : ranked) {
    cumulative += p.frequency;
    out.push_back(std::move(p));
    if (cumulative >= level - 1e-12) break;
  }
  return out;
}

bool contains_partition(const std::vector<PartitionEstimate>& set, std::span<const int> z) {
  const auto target = canonical_labels(z);
  return std::any_of(set.begin(), set.end(), [&](const auto& p) { return p.labels == target; });
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Rho: return "rho";
    case ParamKind::Sigma2: return "sigma2";
    case ParamKind::Coefficient: return "B";
  }
  return "unknown";
}

namespace {

CredibleInterval summarize_draws(std::vector<double> draws, double level) {
  CredibleInterval ci;
  double sum = 0.0;
  for (double x : draws) sum += x;
  ci.mean = sum / static_cast<double>(draws.size());
  const double tail = 0.5 * (1.0 - level);
  ci.lower = quantile(draws, tail);
  ci.upper = quantile(std::move(draws), 1.0 - tail);
  return ci;
}

void attach_truth(CredibleInterval& ci, double truth) {
  ci.truth = truth;
  ci.covered = ci.lower <= truth && truth <= ci.upper;
}

}  // namespace

IntervalTable credible_intervals(std::span<const Snapshot> samples, double level,
                                 bool condition_on_map, const TruthBundle* truth) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("credible level must lie in (0, 1)");
  IntervalTable table;
  table.level = level;
  table.map = map_partition(samples);

  // snapshots entering the intervals, with their label -> canonical label map
  std::vector<std::pair<const Snapshot*, std::vector<int>>> used;
  for (const auto& s : samples) {
    if (condition_on_map && canonical_labels(s.z) != table.map.labels) continue;
    const int k = s.clusters();
    used.emplace_back(&s, relabel_map(ClusterAssignment(s.z, k)));
  }
  if (used.empty()) {
    throw DomainError("no snapshot matches the MAP partition (MAP mass " +
                      std::to_string(table.map.frequency) + ")");
  }
  table.draws = static_cast<long>(used.size());

  const ClusterAssignment map_assign(table.map.labels,
                                     *std::max_element(table.map.labels.begin(), table.map.labels.end()) + 1);
  const auto map_members = map_assign.members();
  const int j_map = map_assign.max_clusters();

  // truth cluster with the same member set, per MAP cluster
  std::vector<int> truth_label(static_cast<std::size_t>(j_map), -1);
  if (truth) {
    const auto truth_members = truth->assignment.members();
    for (int j = 0; j < j_map; ++j) {
      for (std::size_t t = 0; t < truth_members.size(); ++t) {
        if (!truth_members[t].empty() && truth_members[t] == map_members[static_cast<std::size_t>(j)]) {
          truth_label[static_cast<std::size_t>(j)] = static_cast<int>(t);
        }
      }
    }
    table.map_matches_truth = canonical_labels(truth->assignment.labels()) == table.map.labels;
  }

  // without conditioning a snapshot contributes to cluster j only when the
  // cluster holding j's first member has the same canonical label
  for (int j = 0; j < j_map; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const bool multi = map_members[jj].size() > 1;
    std::vector<double> rho, sigma2;
    for (const auto& [snap, map] : used) {
      const int member = map_members[jj].front();
      const int label = snap->z[static_cast<std::size_t>(member)];
      if (condition_on_map || map[static_cast<std::size_t>(label)] == j) {
        sigma2.push_back(snap->sigma2[static_cast<std::size_t>(label)]);
        rho.push_back(snap->rho[static_cast<std::size_t>(label)]);
      }
    }
    if (sigma2.empty()) continue;
    if (multi) {
      auto ci = summarize_draws(rho, level);
      ci.kind = ParamKind::Rho;
      ci.cluster = j;
      if (truth_label[jj] >= 0) attach_truth(ci, truth->cov.rho[static_cast<std::size_t>(truth_label[jj])]);
      table.rows.push_back(ci);
    }
    auto ci = summarize_draws(sigma2, level);
    ci.kind = ParamKind::Sigma2;
    ci.cluster = j;
    if (truth_label[jj] >= 0) attach_truth(ci, truth->cov.sigma2[static_cast<std::size_t>(truth_label[jj])]);
    table.rows.push_back(ci);
  }

  const Eigen::MatrixXd& b0 = used.front().first->b;
  if (b0.size() > 0) {
    for (Eigen::Index q = 0; q < b0.cols(); ++q) {
      for (Eigen::Index k = 0; k < b0.rows(); ++k) {
        std::vector<double> draws;
        draws.reserve(used.size());
        for (const auto& entry : used) draws.push_back(entry.first->b(k, q));
        auto ci = summarize_draws(std::move(draws), level);
        ci.kind = ParamKind::Coefficient;
        ci.row = static_cast<int>(k);
        ci.col = static_cast<int>(q);
        if (truth && truth->coef.b.rows() == b0.rows() && truth->coef.b.cols() == b0.cols()) {
          attach_truth(ci, truth->coef.b(k, q));
        }
        table.rows.push_back(ci);
      }
    }
  }
  return table;
}

CoverageSummary coverage(const IntervalTable& table) {
  CoverageSummary c;
  c.map_matches_truth = table.map_matches_truth;
  int hit_rho = 0, hit_sigma2 = 0, hit_b = 0;
  for (const auto& row : table.rows) {
    if (!row.covered) continue;
    const int hit = *row.covered ? 1 : 0;
    switch (row.kind) {
      case ParamKind::Rho: ++c.n_rho; hit_rho += hit; break;
      case ParamKind::Sigma2: ++c.n_sigma2; hit_sigma2 += hit; break;
      case ParamKind::Coefficient: ++c.n_coefficient; hit_b += hit; break;
    }
  }
  auto ratio = [](int hit, int n) { return n > 0 ? static_cast<double>(hit) / n : std::nan(""); };
  c.rho = ratio(hit_rho, c.n_rho);
  c.sigma2 = ratio(hit_sigma2, c.n_sigma2);
  c.coefficient = ratio(hit_b, c.n_coefficient);
  return c;
}

std::vector<CoverageRow> coverage_table(std::span<const CoverageSummary> replicates) {
  if (replicates.size() < 2) throw DomainError("coverage table needs at least two replicates");
  auto row = [&](ParamKind kind, auto field) {
    std::vector<double> v;
    for (const auto& r : replicates) {
      const double x = r.*field;
      if (!std::isnan(x)) v.push_back(x);
    }
    CoverageRow out{kind, std::nan(""), std::nan(""), static_cast<int>(v.size())};
    if (v.empty()) return out;
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - out.mean) * (x - out.mean);
      out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
  };
  return {row(ParamKind::Rho, &CoverageSummary::rho), row(ParamKind::Sigma2, &CoverageSummary::sigma2),
          row(ParamKind::Coefficient, &CoverageSummary::coefficient)};
}

std::vector<TracePoint> cluster_count_trace(std::span<const Snapshot> samples) {
  std::vector<TracePoint> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto z = ClusterAssignment(s.z, std::max(1, s.clusters()));
    out.push_back({s.iteration, s.phase, z.num_occupied()});
  }
  return out;
}

std::vector<double> autocorrelation(std::span<const double> series, int max_lag) {
  if (max_lag < 0) throw DomainError("max_lag must be non-negative");
  if (static_cast<long>(series.size()) <= max_lag) throw DomainError("series shorter than max_lag + 1");
  const double n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= n;
  double denom = 0.0;
  for (double x : series) denom += (x - mean) * (x - mean);
  if (!(denom > 0.0)) throw DomainError("autocorrelation of a constant series");
  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < series.size(); ++t) {
      num += (series[t] - mean) * (series[t + static_cast<std::size_t>(k)] - mean);
    }
    acf[static_cast<std::size_t>(k)] = num / denom;
  }
  return acf;
}

}  // namespace covclust
