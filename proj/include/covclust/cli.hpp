#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace covclust {

namespace fs = std::filesystem;

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3, kExitChainAbort = 4 };

/// Writes outcomes.csv, covariates.csv, locations.csv (if needed) and
/// truth.json under `out`.
void cli_simulate(const fs::path& config, const fs::path& out);

/// One run directory per seed (out/seed_<seed>). Returns kExitChainAbort if
/// any chain aborted; the other seeds still complete.
int cli_fit(const fs::path& config, const fs::path& data, const std::vector<std::uint64_t>& seeds,
            const fs::path& out, int workers);

struct SummarizeOptions {
  std::vector<fs::path> runs;  // run directories or fit output directories
  std::optional<fs::path> truth;
  double level = 0.95;
  double threshold = 0.9;
  fs::path out;
};

void cli_summarize(const SummarizeOptions& options);

/// Each input CSV holds one subject's series (rows are time points).
void cli_preprocess(const std::vector<fs::path>& subjects, int lag, const fs::path& out);

/// COVCLUST_WORKERS, defaulting to the hardware concurrency.
int worker_count_from_env();

/// Command-line front end; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace covclust
