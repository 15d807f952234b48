#include "covclust/model.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

#include "covclust/errors.hpp"

namespace covclust {

HyperParams HyperParams::defaults(int m, int k) {
  HyperParams h;
  h.k = k > 0 ? k : m;
  h.a0 = h.k + 0.01;
  h.b0 = 1.01;
  h.walker_step = std::max(2, h.k / 2);
  return h;
}

void HyperParams::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (k < 1) throw ConfigError("K must be at least 1");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("p0 must lie in (0, 1)");
  if (!positive(tau2)) throw ConfigError("tau2 must be positive");
  if (!positive(a0) || !positive(b0) || !positive(a1) || !positive(b1) || !positive(a2) ||
      !positive(b2)) {
    throw ConfigError("prior shape and rate parameters must be positive");
  }
  if (!(rho_upper > 0.0 && rho_upper < 1.0)) throw ConfigError("rho_upper must lie in (0, 1)");
  if (!positive(lambda_burnin) || !positive(lambda_sampling)) {
    throw ConfigError("lambda must be positive");
  }
  if (lambda_sampling < lambda_burnin) {
    throw ConfigError("lambda_sampling must be at least lambda_burnin");
  }
  if (walker_step < 1) throw ConfigError("walker_step must be at least 1");
  if (split_weights.empty() || !(split_remainder >= 0.0)) {
    throw ConfigError("split weights must be non-empty and the remainder non-negative");
  }
  for (double w : split_weights) {
    if (!positive(w)) throw ConfigError("split weights must be positive");
  }
}

void Dataset::validate(bool needs_locations) const {
  if (n() < 2) throw DataError("at least two replicates (rows) are required");
  if (m() < 2) throw DataError("at least two outcome columns are required");
  if (covariates.rows() != outcomes.rows()) {
    throw DataError("covariates and outcomes have different row counts");
  }
  if (p() < 1) throw DataError("at least one covariate column is required");
  if (!outcomes.allFinite()) throw DataError("outcomes contain missing or non-finite values");
  if (!covariates.allFinite()) throw DataError("covariates contain missing or non-finite values");
  if (needs_locations && !locations) {
    throw DataError("the configured kernel requires locations");
  }
  if (!needs_locations && locations) {
    throw DataError("locations supplied for a kernel that does not use them");
  }
  if (locations) {
    if (locations->rows() != m()) throw DataError("locations must have one row per outcome");
    if (!locations->allFinite()) throw DataError("locations contain non-finite values");
  }
  if (!labels.empty() && static_cast<int>(labels.size()) != m()) {
    throw DataError("column label count does not match outcome columns");
  }
}

ClusterAssignment::ClusterAssignment(std::vector<int> z, int k) : z_(std::move(z)), k_(k) {
  for (int label : z_) {
    if (label < 0 || label >= k_) throw DomainError("cluster label outside {0..K-1}");
  }
}

int ClusterAssignment::num_clusters() const {
  return z_.empty() ? 0 : *std::max_element(z_.begin(), z_.end()) + 1;
}

int ClusterAssignment::num_occupied() const {
  const auto c = counts();
  return static_cast<int>(std::count_if(c.begin(), c.end(), [](int x) { return x > 0; }));
}

int ClusterAssignment::num_multi() const {
  const auto c = counts();
  return static_cast<int>(std::count_if(c.begin(), c.end(), [](int x) { return x > 1; }));
}

std::vector<int> ClusterAssignment::counts() const {
  std::vector<int> c(static_cast<std::size_t>(k_), 0);
  for (int label : z_) ++c[static_cast<std::size_t>(label)];
  return c;
}

std::vector<std::vector<int>> ClusterAssignment::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k_));
  for (int m = 0; m < size(); ++m) out[static_cast<std::size_t>(z_[m])].push_back(m);
  return out;
}

Permutation permutation_from_z(std::span<const int> z) {
  Permutation p;
  p.order.resize(z.size());
  std::iota(p.order.begin(), p.order.end(), 0);
  std::stable_sort(p.order.begin(), p.order.end(),
                   [&](int a, int b) { return z[static_cast<std::size_t>(a)] < z[static_cast<std::size_t>(b)]; });
  p.position.resize(z.size());
  for (std::size_t i = 0; i < p.order.size(); ++i) p.position[static_cast<std::size_t>(p.order[i])] = static_cast<int>(i);
  return p;
}

std::vector<double> stick_weights(std::span<const double> v) {
  if (v.empty()) throw DomainError("stick end-points are empty");
  for (double x : v) {
    if (!(x > 0.0 && x <= 1.0)) throw DomainError("stick end-point outside (0, 1]");
  }
  if (v.back() != 1.0) throw DomainError("last stick end-point must equal 1");
  std::vector<double> w(v.size());
  double remaining = 1.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    w[j] = v[j] * remaining;
    remaining *= 1.0 - v[j];
  }
  return w;
}

std::vector<double> StickState::log_weights() const {
  std::vector<double> out(v.size());
  double log_remaining = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = std::log(v[j]) + log_remaining;
    log_remaining += std::log1p(-v[j]);
  }
  return out;
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::BurnIn1: return "burnin1";
    case Phase::BurnIn2: return "burnin2";
    case Phase::Sampling: return "sampling";
  }
  return "unknown";
}

Phase parse_phase(const std::string& text) {
  if (text == "burnin1") return Phase::BurnIn1;
  if (text == "burnin2") return Phase::BurnIn2;
  if (text == "sampling") return Phase::Sampling;
  throw DataError("unknown phase tag '" + text + "'");
}

std::vector<int> relabel_map(const ClusterAssignment& assignment) {
  const int k = assignment.max_clusters();
  const auto counts = assignment.counts();
  std::vector<int> first(static_cast<std::size_t>(k), assignment.size());
  for (int m = assignment.size() - 1; m >= 0; --m) first[static_cast<std::size_t>(assignment[m])] = m;

  std::vector<int> used;
  std::vector<int> unused;
  for (int j = 0; j < k; ++j) (counts[static_cast<std::size_t>(j)] > 0 ? used : unused).push_back(j);
  std::sort(used.begin(), used.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (counts[ua] != counts[ub]) return counts[ua] > counts[ub];
    return first[ua] < first[ub];
  });

  std::vector<int> new_of_old(static_cast<std::size_t>(k));
  int next = 0;
  for (int old : used) new_of_old[static_cast<std::size_t>(old)] = next++;
  for (int old : unused) new_of_old[static_cast<std::size_t>(old)] = next++;
  return new_of_old;
}

namespace {

template <class T>
std::vector<T> permute_slots(const std::vector<T>& values, const std::vector<int>& new_of_old) {
  if (values.size() != new_of_old.size()) return values;
  std::vector<T> out(values.size());
  for (std::size_t old = 0; old < values.size(); ++old) {
    out[static_cast<std::size_t>(new_of_old[old])] = values[old];
  }
  return out;
}

ClusterAssignment apply_map(const ClusterAssignment& a, const std::vector<int>& new_of_old) {
  std::vector<int> z(a.labels());
  for (int& label : z) label = new_of_old[static_cast<std::size_t>(label)];
  return ClusterAssignment(std::move(z), a.max_clusters());
}

}  // namespace

std::pair<ClusterAssignment, ClusterCovParams> relabel(const ClusterAssignment& assignment,
                                                        const ClusterCovParams& cov) {
  const auto map = relabel_map(assignment);
  return {apply_map(assignment, map),
          ClusterCovParams{permute_slots(cov.sigma2, map), permute_slots(cov.rho, map)}};
}

void relabel(ChainState& state) {
  const auto map = relabel_map(state.assignment);
  state.assignment = apply_map(state.assignment, map);
  state.cov.sigma2 = permute_slots(state.cov.sigma2, map);
  state.cov.rho = permute_slots(state.cov.rho, map);
  state.rho_step = permute_slots(state.rho_step, map);
  // weights follow their clusters; V is rebuilt from the permuted weights
  auto& st = state.sticks;
  if (st.w.size() == map.size() && st.v.size() == map.size()) {
    st.w = permute_slots(st.w, map);
    double remaining = 1.0;
    for (std::size_t j = 0; j < st.v.size(); ++j) {
      const double v = remaining > 0.0 ? st.w[j] / remaining : 1.0;
      st.v[j] = std::clamp(v, std::numeric_limits<double>::min(), 1.0);
      remaining -= st.w[j];
    }
    st.v.back() = 1.0;
  }
}

std::vector<int> canonical_labels(std::span<const int> z) {
  if (z.empty()) return {};
  const int k = *std::max_element(z.begin(), z.end()) + 1;
  ClusterAssignment a(std::vector<int>(z.begin(), z.end()), k);
  const auto map = relabel_map(a);
  std::vector<int> out(z.size());
  for (std::size_t m = 0; m < z.size(); ++m) out[m] = map[static_cast<std::size_t>(z[m])];
  return out;
}

}  // namespace covclust
