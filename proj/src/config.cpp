#include "covclust/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "covclust/errors.hpp"
#include "covclust/io.hpp"

namespace covclust {

namespace {

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      // simulation design
      {"m", [](RunConfig& c, auto& k, auto& v) { c.design.m = to_int(k, v); }},
      {"n", [](RunConfig& c, auto& k, auto& v) { c.design.n = to_int(k, v); }},
      {"partition", [](RunConfig& c, auto&, auto& v) {
         if (v == "uniform") c.design.partition = PartitionKind::UniformEqual;
         else if (v == "dp") c.design.partition = PartitionKind::DirichletProcess;
         else throw ConfigError("partition must be uniform or dp");
       }},
      {"clusters", [](RunConfig& c, auto& k, auto& v) { c.design.clusters = to_int(k, v); }},
      {"alpha_true", [](RunConfig& c, auto& k, auto& v) { c.design.alpha_true = to_double(k, v); }},
      {"grid", [](RunConfig& c, auto&, auto& v) {
         if (v == "heterogeneous") c.design.grid = ParamGrid::Heterogeneous;
         else if (v == "homogeneous") c.design.grid = ParamGrid::Homogeneous;
         else throw ConfigError("grid must be heterogeneous or homogeneous");
       }},
      {"rho_const", [](RunConfig& c, auto& k, auto& v) { c.design.rho_const = to_double(k, v); }},
      {"sigma2_const", [](RunConfig& c, auto& k, auto& v) { c.design.sigma2_const = to_double(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) {
         const long s = to_long(k, v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.design.seed = static_cast<std::uint64_t>(s);
       }},
      // kernel
      {"kernel", [](RunConfig& c, auto&, auto& v) { c.kernel.family = parse_kernel_family(v); }},
      {"nu", [](RunConfig& c, auto& k, auto& v) { c.kernel.nu = to_double(k, v); }},
      {"distance_scale", [](RunConfig& c, auto& k, auto& v) { c.kernel.distance_scale = to_double(k, v); }},
      // model
      {"k", [](RunConfig& c, auto& k, auto& v) { c.k = to_int(k, v); }},
      {"tau2", [](RunConfig& c, auto& k, auto& v) { c.hyper.tau2 = to_double(k, v); }},
      {"a0", [](RunConfig& c, auto& k, auto& v) { c.a0 = to_double(k, v); }},
      {"b0", [](RunConfig& c, auto& k, auto& v) { c.hyper.b0 = to_double(k, v); }},
      {"a1", [](RunConfig& c, auto& k, auto& v) { c.hyper.a1 = to_double(k, v); }},
      {"b1", [](RunConfig& c, auto& k, auto& v) { c.hyper.b1 = to_double(k, v); }},
      {"a2", [](RunConfig& c, auto& k, auto& v) { c.hyper.a2 = to_double(k, v); }},
      {"b2", [](RunConfig& c, auto& k, auto& v) { c.hyper.b2 = to_double(k, v); }},
      {"lambda_burnin", [](RunConfig& c, auto& k, auto& v) { c.hyper.lambda_burnin = to_double(k, v); }},
      {"lambda_sampling", [](RunConfig& c, auto& k, auto& v) { c.hyper.lambda_sampling = to_double(k, v); }},
      {"p0", [](RunConfig& c, auto& k, auto& v) { c.hyper.p0 = to_double(k, v); }},
      {"walker_step", [](RunConfig& c, auto& k, auto& v) { c.walker_step = to_int(k, v); }},
      {"htsm_weights", [](RunConfig& c, auto&, auto& v) {
         if (v == "marginal") c.hyper.htsm_marginal_weights = true;
         else if (v == "conditional") c.hyper.htsm_marginal_weights = false;
         else throw ConfigError("htsm_weights must be 'marginal' or 'conditional'");
       }},
      {"rho_upper", [](RunConfig& c, auto& k, auto& v) { c.hyper.rho_upper = to_double(k, v); }},
      // schedule and output
      {"burnin1", [](RunConfig& c, auto& k, auto& v) { c.schedule.burnin1 = to_long(k, v); }},
      {"burnin2", [](RunConfig& c, auto& k, auto& v) { c.schedule.burnin2 = to_long(k, v); }},
      {"sampling", [](RunConfig& c, auto& k, auto& v) { c.schedule.sampling = to_long(k, v); }},
      {"thin", [](RunConfig& c, auto& k, auto& v) { c.options.thin = to_long(k, v); }},
      {"walker_all_phases", [](RunConfig& c, auto& k, auto& v) { c.options.walker_all_phases = to_bool(k, v); }},
      {"store_b", [](RunConfig& c, auto& k, auto& v) { c.store_b = to_bool(k, v); }},
  };
  return table;
}

std::string strip_hash_comments(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(strip_hash_comments(text));
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  bool distance_scale_set = false;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config sections are not supported ('" + key + "')");
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    const std::string value = node.data();
    it->second(c, key, value);
    c.entries[key] = value;
    distance_scale_set |= key == "distance_scale";
  }
  // Matern distances are divided by 20 unless configured otherwise
  if (!distance_scale_set && c.kernel.family == KernelFamily::Matern32) c.kernel.distance_scale = 20.0;
  c.design.kernel = c.kernel;

  c.kernel.validate();
  c.schedule.validate();
  if (c.options.thin < 1) throw ConfigError("thin must be at least 1");
  if (c.k && *c.k < 1) throw ConfigError("k must be at least 1");
  if (c.walker_step && *c.walker_step < 1) throw ConfigError("walker_step must be at least 1");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

HyperParams resolve_hyper(const RunConfig& config, int m) {
  HyperParams h = config.hyper;
  h.k = config.k.value_or(std::max(1, m / 2));
  h.a0 = config.a0.value_or(h.k + 0.01);
  h.walker_step = config.walker_step.value_or(std::max(2, h.k / 2));
  h.validate();
  return h;
}

std::map<std::string, std::string> resolved_settings(const RunConfig& config, int m) {
  const HyperParams h = resolve_hyper(config, m);
  std::map<std::string, std::string> s;
  s["k"] = std::to_string(h.k);
  s["tau2"] = format_double(h.tau2);
  s["a0"] = format_double(h.a0);
  s["b0"] = format_double(h.b0);
  s["a1"] = format_double(h.a1);
  s["b1"] = format_double(h.b1);
  s["a2"] = format_double(h.a2);
  s["b2"] = format_double(h.b2);
  s["lambda_burnin"] = format_double(h.lambda_burnin);
  s["lambda_sampling"] = format_double(h.lambda_sampling);
  s["p0"] = format_double(h.p0);
  s["walker_step"] = std::to_string(h.walker_step);
  s["rho_upper"] = format_double(h.rho_upper);
  s["htsm_weights"] = h.htsm_marginal_weights ? "marginal" : "conditional";
  s["kernel"] = to_string(config.kernel.family);
  s["nu"] = format_double(config.kernel.nu);
  s["distance_scale"] = format_double(config.kernel.distance_scale);
  s["burnin1"] = std::to_string(config.schedule.burnin1);
  s["burnin2"] = std::to_string(config.schedule.burnin2);
  s["sampling"] = std::to_string(config.schedule.sampling);
  s["thin"] = std::to_string(config.options.thin);
  s["walker_all_phases"] = config.options.walker_all_phases ? "true" : "false";
  s["store_b"] = config.store_b ? "true" : "false";
  return s;
}

std::string config_hash(const std::map<std::string, std::string>& settings) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [k, v] : settings) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace covclust
