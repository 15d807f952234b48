#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "covclust/chain.hpp"
#include "covclust/cli.hpp"
#include "covclust/errors.hpp"
#include "covclust/io.hpp"
#include "covclust/kernels.hpp"
#include "covclust/posterior.hpp"
#include "covclust/simulate.hpp"

namespace py = pybind11;
using namespace covclust;

namespace {

KernelSpec make_kernel(const std::string& name, double nu, double distance_scale) {
  KernelSpec k;
  k.family = parse_kernel_family(name);
  k.nu = nu;
  k.distance_scale = distance_scale;
  k.validate();
  return k;
}

// labels cross the boundary 1-based
std::vector<int> to_one_based(std::vector<int> z) {
  for (int& l : z) ++l;
  return z;
}

std::vector<int> to_zero_based(std::vector<int> z) {
  for (int& l : z) {
    if (l < 1) throw DomainError("cluster labels are 1-based");
    --l;
  }
  return z;
}

Dataset make_dataset(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x,
                     const std::optional<Eigen::MatrixXd>& locations, const KernelSpec& kernel) {
  Dataset d;
  d.outcomes = y;
  d.covariates = x;
  if (kernel.needs_locations()) d.locations = locations;
  d.validate(kernel.needs_locations());
  return d;
}

py::dict snapshot_dict(const Snapshot& s) {
  py::dict d;
  d["iteration"] = s.iteration;
  d["phase"] = to_string(s.phase);
  d["z"] = to_one_based(s.z);
  d["alpha"] = s.alpha;
  d["sigma2"] = s.sigma2;
  d["rho"] = s.rho;
  d["log_likelihood"] = s.log_likelihood;
  if (s.b.size() > 0) d["b"] = s.b;
  return d;
}

std::vector<Snapshot> partitions_only(const std::vector<std::vector<int>>& draws) {
  std::vector<Snapshot> out;
  out.reserve(draws.size());
  for (const auto& z : draws) {
    Snapshot s;
    s.z = to_zero_based(z);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_covclust, m) {
  m.doc() = "Bayesian clustering of covariance blocks";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ChainAbort>(m, "ChainAbort", PyExc_RuntimeError);

  m.def("stick_weights", [](const std::vector<double>& v) { return stick_weights(v); }, py::arg("v"));

  m.def("canonical_labels",
        [](const std::vector<int>& z) { return to_one_based(canonical_labels(to_zero_based(z))); },
        py::arg("z"));

  m.def(
      "log_likelihood",
      [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const std::vector<int>& z,
         const std::vector<double>& sigma2, const std::vector<double>& rho, const Eigen::MatrixXd& b,
         const std::string& kernel, double nu, double distance_scale,
         const std::optional<Eigen::MatrixXd>& locations, double rho_upper) {
        const KernelSpec spec = make_kernel(kernel, nu, distance_scale);
        const Dataset data = make_dataset(y, x, locations, spec);
        if (sigma2.size() != rho.size()) throw DomainError("sigma2 and rho differ in length");
        ChainState state;
        state.assignment = ClusterAssignment(to_zero_based(z), static_cast<int>(sigma2.size()));
        state.cov = ClusterCovParams{sigma2, rho};
        state.coef = RegressionCoefficients{b};
        const CorrelationModel corr(spec, data.locations, data.m(), rho_upper);
        return log_likelihood(corr, state, data);
      },
      py::arg("y"), py::arg("x"), py::arg("z"), py::arg("sigma2"), py::arg("rho"), py::arg("b"),
      py::arg("kernel") = "cs", py::arg("nu") = 0.2, py::arg("distance_scale") = 1.0,
      py::arg("locations") = py::none(), py::arg("rho_upper") = 0.95);

  m.def(
      "simulate",
      [](int m_, int n, const std::string& partition, int clusters, double alpha_true,
         const std::string& kernel, double nu, double distance_scale, const std::string& grid,
         std::uint64_t seed) {
        SimDesign d;
        d.m = m_;
        d.n = n;
        if (partition == "uniform") d.partition = PartitionKind::UniformEqual;
        else if (partition == "dp") d.partition = PartitionKind::DirichletProcess;
        else throw ConfigError("partition must be 'uniform' or 'dp'");
        if (grid == "heterogeneous") d.grid = ParamGrid::Heterogeneous;
        else if (grid == "homogeneous") d.grid = ParamGrid::Homogeneous;
        else throw ConfigError("grid must be 'heterogeneous' or 'homogeneous'");
        d.clusters = clusters;
        d.alpha_true = alpha_true;
        d.kernel = make_kernel(kernel, nu, distance_scale);
        d.seed = seed;
        const auto sim = simulate(d);
        py::dict out;
        out["y"] = sim.data.outcomes;
        out["x"] = sim.data.covariates;
        out["locations"] = sim.data.locations ? py::cast(*sim.data.locations) : py::none();
        out["z"] = to_one_based(sim.truth.assignment.labels());
        out["sigma2"] = sim.truth.cov.sigma2;
        out["rho"] = sim.truth.cov.rho;
        out["b"] = sim.truth.coef.b;
        return out;
      },
      py::arg("m") = 100, py::arg("n") = 100, py::arg("partition") = "uniform", py::arg("clusters") = 20,
      py::arg("alpha_true") = 6.0, py::arg("kernel") = "ar1", py::arg("nu") = 0.2,
      py::arg("distance_scale") = 1.0, py::arg("grid") = "heterogeneous", py::arg("seed") = 1);

  m.def(
      "fit",
      [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const std::string& kernel, double nu,
         double distance_scale, const std::optional<Eigen::MatrixXd>& locations, int k, long burnin1,
         long burnin2, long sampling, long thin, std::uint64_t seed, bool store_b) {
        const KernelSpec spec = make_kernel(kernel, nu, distance_scale);
        const Dataset data = make_dataset(y, x, locations, spec);
        const HyperParams hyper = HyperParams::defaults(data.m(), k > 0 ? k : std::max(1, data.m() / 2));
        const PhaseSchedule schedule{burnin1, burnin2, sampling};
        ChainOptions options;
        options.thin = thin;
        std::vector<Snapshot> draws;
        {
          py::gil_scoped_release release;
          run_chain(data, hyper, spec, schedule, seed,
                    [&](const ChainState& s, const IterationReport& r) {
                      draws.push_back(make_snapshot(s, store_b, r.log_likelihood));
                    },
                    options);
        }
        py::list out;
        for (const auto& s : draws) out.append(snapshot_dict(s));
        return out;
      },
      py::arg("y"), py::arg("x"), py::arg("kernel") = "cs", py::arg("nu") = 0.2,
      py::arg("distance_scale") = 1.0, py::arg("locations") = py::none(), py::arg("k") = 0,
      py::arg("burnin1") = 1000, py::arg("burnin2") = 1000, py::arg("sampling") = 3000, py::arg("thin") = 1,
      py::arg("seed") = 1, py::arg("store_b") = false);

  m.def(
      "map_partition",
      [](const std::vector<std::vector<int>>& draws) {
        const auto est = map_partition(partitions_only(draws));
        return py::make_tuple(to_one_based(est.labels), est.frequency);
      },
      py::arg("draws"));

  m.def(
      "similarity_matrix",
      [](const std::vector<std::vector<int>>& draws) { return similarity_matrix(partitions_only(draws)); },
      py::arg("draws"));

  m.def(
      "credible_partition_set",
      [](const std::vector<std::vector<int>>& draws, double level) {
        py::list out;
        for (const auto& e : credible_partition_set(partitions_only(draws), level)) {
          out.append(py::make_tuple(to_one_based(e.labels), e.frequency));
        }
        return out;
      },
      py::arg("draws"), py::arg("level") = 0.95);

  m.def("autocorrelation",
        [](const std::vector<double>& series, int max_lag) { return autocorrelation(series, max_lag); },
        py::arg("series"), py::arg("max_lag"));

  m.def(
      "preprocess",
      [](const std::vector<Eigen::MatrixXd>& subjects, int lag) {
        const Dataset d = preprocess_timeseries(subjects, lag);
        return py::make_tuple(d.outcomes, d.covariates);
      },
      py::arg("subjects"), py::arg("lag") = 2);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "covclust");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
