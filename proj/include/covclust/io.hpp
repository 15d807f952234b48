#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covclust/model.hpp"
#include "covclust/posterior.hpp"
#include "covclust/simulate.hpp"

namespace covclust {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

/// 17 significant digits, enough to read back the identical double.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

void write_csv(const fs::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header);
/// Headered numeric CSV. Throws DataError on ragged rows, empty cells or
/// non-numeric entries.
CsvTable read_csv(const fs::path& path);

/// Column names prefix1..prefixN.
std::vector<std::string> numbered_header(const std::string& prefix, int count);

/// outcomes.csv, covariates.csv and, when present, locations.csv.
void write_dataset(const fs::path& dir, const Dataset& data);
Dataset read_dataset(const fs::path& dir);

/// truth.json with 1-based labels.
void write_truth(const fs::path& path, const TruthBundle& truth);
TruthBundle read_truth(const fs::path& path);

/// Run-length encoding of a label vector as (label, count) pairs.
std::vector<std::pair<int, int>> rle_encode(std::span<const int> z);
std::vector<int> rle_decode(std::span<const std::pair<int, int>> runs);

struct Manifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  int m = 0, n = 0, p = 0, k = 0;
  std::string kernel;
  std::string version = kVersion;
  std::string status = "running";
  std::map<std::string, std::string> config;  // resolved settings
};

void write_manifest(const fs::path& path, const Manifest& manifest);
Manifest read_manifest(const fs::path& path);

/// One JSON object per line in samples.jsonl; z is stored 1-based and
/// run-length encoded.
std::string snapshot_to_json_line(const Snapshot& snapshot);
Snapshot snapshot_from_json_line(const std::string& line);

/// Append-only writer for a run directory (manifest.json, samples.jsonl).
class ArchiveWriter {
 public:
  ArchiveWriter(const fs::path& dir, Manifest manifest);
  void append(const Snapshot& snapshot);
  void finish(const std::string& status);
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  Manifest manifest_;
  std::ofstream samples_;
  long last_iteration_ = 0;
};

struct Archive {
  fs::path dir;
  Manifest manifest;
  std::vector<Snapshot> snapshots;
};

Archive read_archive(const fs::path& dir);

/// Keeps time points lag, 2 lag, ... (1-based) of every subject series,
/// stacks them, adds subject-indicator covariates and standardizes every
/// outcome column over the pooled rows.
Dataset preprocess_timeseries(std::span<const Eigen::MatrixXd> subjects, int lag);

}  // namespace covclust
