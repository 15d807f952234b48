#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "covclust/chain.hpp"
#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/partition.hpp"
#include "covclust/simulate.hpp"

namespace covclust {

/// Settings read from a flat key = value file. Model hyperparameters that
/// depend on M stay unset until resolve_hyper.
struct RunConfig {
  SimDesign design;
  KernelSpec kernel;
  PhaseSchedule schedule;
  ChainOptions options;
  bool store_b = true;

  std::optional<int> k;
  std::optional<int> walker_step;
  std::optional<double> a0;
  HyperParams hyper;  // K-independent values

  std::map<std::string, std::string> entries;  // keys present in the file, normalized
};

/// Throws ConfigError on unknown keys, sections, duplicate keys or values
/// that do not parse.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Defaults for an M-dimensional outcome: K = M/2, a0 = K + 0.01,
/// walker_step = max(2, K/2); explicit settings take precedence.
HyperParams resolve_hyper(const RunConfig& config, int m);

/// Resolved settings as text, one entry per key, for manifests.
std::map<std::string, std::string> resolved_settings(const RunConfig& config, int m);

/// 64-bit FNV-1a of the resolved settings, as 16 hex digits.
std::string config_hash(const std::map<std::string, std::string>& settings);

}  // namespace covclust
