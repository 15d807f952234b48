#pragma once

#include <cstdint>
#include <functional>

#include "covclust/kernels.hpp"
#include "covclust/model.hpp"
#include "covclust/partition.hpp"
#include "covclust/random.hpp"

namespace covclust {

struct ChainOptions {
  bool walker_all_phases = true;  // Walker sweeps also in phases II and III
  long thin = 1;                  // emit every thin-th iteration
};

/// Per-iteration diagnostics handed to the snapshot sink.
struct IterationReport {
  long iteration = 0;
  Phase phase = Phase::BurnIn1;
  int clusters = 0;
  bool htsm_attempted = false;
  bool htsm_accepted = false;
  MoveKind htsm_kind = MoveKind::Split;
  long accepted_total = 0;
  double log_likelihood = 0.0;
};

using SnapshotSink = std::function<void(const ChainState&, const IterationReport&)>;

/// Starting state: theta and V from the prior, B = 0, alpha at its prior
/// mean, z as singletons when K = M and contiguous blocks otherwise.
ChainState initialize_chain(const Dataset& data, const HyperParams& hyper,
                            const CorrelationModel& corr, Rng& rng);

/// Runs the three-phase sampler. Any failure is rethrown as ChainAbort
/// carrying the iteration number.
void run_chain(const Dataset& data, const HyperParams& hyper, const KernelSpec& kernel,
               const PhaseSchedule& schedule, std::uint64_t seed, const SnapshotSink& sink,
               const ChainOptions& options = {});

/// Same, continuing from a given state with a caller-supplied RNG.
void run_chain(const Dataset& data, const HyperParams& hyper, const CorrelationModel& corr,
               const PhaseSchedule& schedule, ChainState& state, Rng& rng,
               const SnapshotSink& sink, const ChainOptions& options = {});

}  // namespace covclust
