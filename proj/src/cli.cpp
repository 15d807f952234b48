#include "covclust/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "covclust/chain.hpp"
#include "covclust/config.hpp"
#include "covclust/errors.hpp"
#include "covclust/io.hpp"
#include "covclust/posterior.hpp"
#include "covclust/simulate.hpp"

namespace covclust {

namespace {

std::ofstream open_text(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string optional_number(double x) { return std::isnan(x) ? "" : format_double(x); }

}  // namespace

void cli_simulate(const fs::path& config_path, const fs::path& out) {
  const RunConfig config = load_config(config_path);
  const SimulatedData sim = simulate(config.design);
  write_dataset(out, sim.data);
  write_truth(out / "truth.json", sim.truth);
}

namespace {

// Runs one seed; returns false when the chain aborted.
bool fit_one(const Dataset& data, const RunConfig& config, const HyperParams& hyper,
             const Manifest& base, std::uint64_t seed, const fs::path& dir) {
  Manifest manifest = base;
  manifest.seed = seed;
  ArchiveWriter writer(dir, manifest);
  auto log = open_text(dir / "progress.log");
  log << "iteration\tphase\tJ\taccepted\tloglik\n";

  const SnapshotSink sink = [&](const ChainState& state, const IterationReport& report) {
    writer.append(make_snapshot(state, config.store_b, report.log_likelihood));
    log << report.iteration << '\t' << to_string(report.phase) << '\t' << report.clusters << '\t'
        << report.accepted_total << '\t' << format_double(report.log_likelihood) << '\n';
  };
  try {
    run_chain(data, hyper, config.kernel, config.schedule, seed, sink, config.options);
  } catch (const ChainAbort& e) {
    log << "abort\titeration=" << e.iteration() << "\tcause=" << e.cause() << '\n';
    log.flush();
    writer.finish("aborted");
    return false;
  }
  log.flush();
  writer.finish("complete");
  return true;
}

}  // namespace

int cli_fit(const fs::path& config_path, const fs::path& data_dir,
            const std::vector<std::uint64_t>& seeds, const fs::path& out, int workers) {
  const RunConfig config = load_config(config_path);
  Dataset data = read_dataset(data_dir);
  if (!config.kernel.needs_locations()) data.locations.reset();
  data.validate(config.kernel.needs_locations());
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  const HyperParams hyper = resolve_hyper(config, data.m());

  Manifest base;
  base.config = resolved_settings(config, data.m());
  base.config_hash = config_hash(base.config);
  base.m = data.m();
  base.n = data.n();
  base.p = data.p();
  base.k = hyper.k;
  base.kernel = to_string(config.kernel.family);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        const fs::path dir = out / ("seed_" + std::to_string(seeds[i]));
        if (!fit_one(data, config, hyper, base, seeds[i], dir)) any_abort = true;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return any_abort ? kExitChainAbort : kExitOk;
}

namespace {

std::vector<fs::path> expand_runs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> runs;
  for (const auto& p : inputs) {
    if (fs::exists(p / "manifest.json")) {
      runs.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw DataError("run directory not found: " + p.string());
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) found.push_back(entry.path());
    }
    if (found.empty()) throw DataError("no run archives under " + p.string());
    std::sort(found.begin(), found.end());
    runs.insert(runs.end(), found.begin(), found.end());
  }
  return runs;
}

void write_intervals(const fs::path& path, const IntervalTable& table) {
  auto out = open_text(path);
  out << "parameter,cluster,row,col,mean,lower,upper,truth,covered\n";
  for (const auto& r : table.rows) {
    out << to_string(r.kind) << ',' << (r.cluster >= 0 ? std::to_string(r.cluster + 1) : "") << ','
        << (r.row >= 0 ? std::to_string(r.row + 1) : "") << ','
        << (r.col >= 0 ? std::to_string(r.col + 1) : "") << ',' << format_double(r.mean) << ','
        << format_double(r.lower) << ',' << format_double(r.upper) << ','
        << (r.truth ? format_double(*r.truth) : "") << ','
        << (r.covered ? (*r.covered ? "1" : "0") : "") << '\n';
  }
}

std::string labels_text(const std::vector<int>& z) {
  std::string s;
  for (std::size_t i = 0; i < z.size(); ++i) s += (i ? " " : "") + std::to_string(z[i] + 1);
  return s;
}

}  // namespace

void cli_summarize(const SummarizeOptions& options) {
  if (!(options.level > 0.0 && options.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  const auto run_dirs = expand_runs(options.runs);

  std::vector<Archive> archives;
  for (const auto& d : run_dirs) archives.push_back(read_archive(d));
  const auto& first = archives.front().manifest;
  for (const auto& a : archives) {
    if (a.manifest.m != first.m || a.manifest.k != first.k || a.manifest.config_hash != first.config_hash) {
      throw DataError("archive " + a.dir.string() + " is incompatible with " + archives.front().dir.string());
    }
  }

  std::vector<Snapshot> pooled;
  std::vector<std::vector<Snapshot>> per_run;
  for (const auto& a : archives) {
    per_run.push_back(sampling_window(a.snapshots));
    pooled.insert(pooled.end(), per_run.back().begin(), per_run.back().end());
  }
  if (pooled.empty()) throw DataError("archives contain no sampling-phase snapshots");

  std::optional<TruthBundle> truth;
  if (options.truth) truth = read_truth(*options.truth);
  const TruthBundle* truth_ptr = truth ? &*truth : nullptr;

  fs::create_directories(options.out);
  const auto map = map_partition(pooled);
  {
    auto out = open_text(options.out / "map_partition.csv");
    out << "outcome,cluster\n";
    for (std::size_t m = 0; m < map.labels.size(); ++m) out << m + 1 << ',' << map.labels[m] + 1 << '\n';
  }

  const Eigen::MatrixXd sim = similarity_matrix(pooled);
  write_csv(options.out / "similarity.csv", sim, numbered_header("y", static_cast<int>(sim.cols())));
  {
    auto out = open_text(options.out / "similar_pairs.csv");
    out << "outcome_a,outcome_b,similarity\n";
    for (const auto& [a, b] : similar_pairs(sim, options.threshold)) {
      out << a + 1 << ',' << b + 1 << ',' << format_double(sim(a, b)) << '\n';
    }
  }

  const IntervalTable table = credible_intervals(pooled, options.level, true, truth_ptr);
  write_intervals(options.out / "intervals.csv", table);

  {
    auto out = open_text(options.out / "cluster_trace.csv");
    out << "run,iteration,phase,clusters\n";
    for (std::size_t r = 0; r < archives.size(); ++r) {
      for (const auto& t : cluster_count_trace(archives[r].snapshots)) {
        out << r + 1 << ',' << t.iteration << ',' << to_string(t.phase) << ',' << t.clusters << '\n';
      }
    }
  }

  const auto cset = credible_partition_set(pooled, options.level);
  {
    auto out = open_text(options.out / "credible_set.csv");
    out << "rank,frequency,cumulative,clusters,labels\n";
    double cumulative = 0.0;
    for (std::size_t i = 0; i < cset.size(); ++i) {
      cumulative += cset[i].frequency;
      const int j = *std::max_element(cset[i].labels.begin(), cset[i].labels.end()) + 1;
      out << i + 1 << ',' << format_double(cset[i].frequency) << ',' << format_double(cumulative) << ','
          << j << ',' << labels_text(cset[i].labels) << '\n';
    }
  }

  if (truth) {
    std::vector<CoverageSummary> reps;
    for (const auto& w : per_run) {
      if (!w.empty()) reps.push_back(coverage(credible_intervals(w, options.level, true, truth_ptr)));
    }
    std::vector<CoverageRow> rows;
    if (reps.size() >= 2) {
      rows = coverage_table(reps);
    } else {
      const auto& c = reps.front();
      rows = {{ParamKind::Rho, c.rho, std::nan(""), 1},
              {ParamKind::Sigma2, c.sigma2, std::nan(""), 1},
              {ParamKind::Coefficient, c.coefficient, std::nan(""), 1}};
    }
    auto out = open_text(options.out / "coverage.csv");
    out << "parameter,coverage,sd,replicates\n";
    for (const auto& r : rows) {
      out << to_string(r.kind) << ',' << optional_number(r.mean) << ',' << optional_number(r.sd) << ','
          << r.replicates << '\n';
    }
  }

  nlohmann::ordered_json summary;
  summary["runs"] = archives.size();
  summary["draws"] = pooled.size();
  summary["level"] = options.level;
  summary["threshold"] = options.threshold;
  summary["map_clusters"] = *std::max_element(map.labels.begin(), map.labels.end()) + 1;
  summary["map_frequency"] = map.frequency;
  summary["map_draws"] = table.draws;
  summary["credible_set_size"] = cset.size();
  if (truth) {
    summary["map_equals_truth"] = table.map_matches_truth;
    summary["credible_set_contains_truth"] = contains_partition(cset, truth->assignment.labels());
  }
  open_text(options.out / "summary.json") << summary.dump(2) << '\n';
}

void cli_preprocess(const std::vector<fs::path>& subjects, int lag, const fs::path& out) {
  std::vector<Eigen::MatrixXd> series;
  std::vector<std::string> header;
  for (const auto& p : subjects) {
    auto t = read_csv(p);
    if (header.empty()) header = t.header;
    if (t.header != header) throw DataError(p.string() + ": column names differ from the first subject");
    series.push_back(std::move(t.values));
  }
  Dataset d = preprocess_timeseries(series, lag);
  d.labels = header;
  write_dataset(out, d);
}

int worker_count_from_env() {
  if (const char* env = std::getenv("COVCLUST_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("COVCLUST_WORKERS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian clustering of covariance sub-matrices"};
  app.require_subcommand(1);

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset and its ground truth");
  sim->add_option("--config", sim_config, "Config file")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();

  std::string fit_config, fit_data, fit_out;
  std::vector<std::uint64_t> seeds;
  auto* fit = app.add_subcommand("fit", "Run the sampler for one or more seeds");
  fit->add_option("--config", fit_config, "Config file")->required();
  fit->add_option("--data", fit_data, "Directory with outcomes.csv and covariates.csv")->required();
  fit->add_option("--seeds", seeds, "Seeds (comma or space separated)")->required()->delimiter(',');
  fit->add_option("--out", fit_out, "Output directory")->required();

  SummarizeOptions sopt;
  std::vector<std::string> runs;
  std::string truth, sum_out;
  auto* summ = app.add_subcommand("summarize", "Posterior summaries over run archives");
  summ->add_option("--runs", runs, "Run directories")->required();
  summ->add_option("--truth", truth, "truth.json from simulate");
  summ->add_option("--level", sopt.level, "Credible level");
  summ->add_option("--threshold", sopt.threshold, "Similarity threshold for the pair list");
  summ->add_option("--out", sum_out, "Output directory")->required();

  std::vector<std::string> subjects;
  int lag = 2;
  std::string pre_out;
  auto* pre = app.add_subcommand("preprocess", "Thin and standardize per-subject time series");
  pre->add_option("--input", subjects, "One CSV per subject")->required();
  pre->add_option("--lag", lag, "Keep every lag-th time point");
  pre->add_option("--out", pre_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) {
      cli_simulate(sim_config, sim_out);
    } else if (*fit) {
      return cli_fit(fit_config, fit_data, seeds, fit_out, worker_count_from_env());
    } else if (*summ) {
      for (const auto& r : runs) sopt.runs.emplace_back(r);
      if (!truth.empty()) sopt.truth = truth;
      sopt.out = sum_out;
      cli_summarize(sopt);
    } else if (*pre) {
      std::vector<fs::path> paths(subjects.begin(), subjects.end());
      cli_preprocess(paths, lag, pre_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ChainAbort& e) {
    std::cerr << e.what() << '\n';
    return kExitChainAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace covclust
