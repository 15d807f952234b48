#include "covclust/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "covclust/errors.hpp"

namespace covclust {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const fs::path& path, std::size_t row) {
  const std::string t = trim(text);
  if (t.empty() || t == "NA" || t == "NaN" || t == "nan") {
    throw DataError(path.string() + ": missing value in data row " + std::to_string(row));
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != t.size()) {
    throw DataError(path.string() + ": non-numeric value '" + t + "' in data row " + std::to_string(row));
  }
  if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite value in data row " + std::to_string(row));
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) return {};
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c) throw DataError("ragged matrix in JSON");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

void write_csv(const fs::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DataError("CSV header width does not match the matrix");
  }
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  CsvTable t;
  for (auto& h : split_csv_line(line)) t.header.push_back(trim(h));
  const std::size_t width = t.header.size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) {
      throw DataError(path.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                      std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
    }
    std::vector<double> row;
    row.reserve(width);
    for (const auto& c : cells) row.push_back(parse_number(c, path, rows.size() + 1));
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return t;
}

std::vector<std::string> numbered_header(const std::string& prefix, int count) {
  std::vector<std::string> h;
  for (int i = 1; i <= count; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  write_csv(dir / "outcomes.csv", data.outcomes,
            data.labels.empty() ? numbered_header("y", data.m()) : data.labels);
  write_csv(dir / "covariates.csv", data.covariates, numbered_header("x", data.p()));
  if (data.locations) {
    write_csv(dir / "locations.csv", *data.locations,
              numbered_header("s", static_cast<int>(data.locations->cols())));
  }
}

Dataset read_dataset(const fs::path& dir) {
  Dataset d;
  auto y = read_csv(dir / "outcomes.csv");
  d.outcomes = std::move(y.values);
  d.labels = std::move(y.header);
  d.covariates = read_csv(dir / "covariates.csv").values;
  if (fs::exists(dir / "locations.csv")) d.locations = read_csv(dir / "locations.csv").values;
  return d;
}

void write_truth(const fs::path& path, const TruthBundle& truth) {
  ordered_json j;
  j["seed"] = truth.seed;
  j["m"] = truth.assignment.size();
  j["clusters"] = truth.assignment.num_occupied();
  std::vector<int> z(truth.assignment.labels());
  for (int& v : z) ++v;
  j["z"] = z;
  j["sigma2"] = truth.cov.sigma2;
  j["rho"] = truth.cov.rho;
  j["b"] = matrix_to_json(truth.coef.b);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

TruthBundle read_truth(const fs::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
    TruthBundle t;
    t.seed = j.at("seed").get<std::uint64_t>();
    auto z = j.at("z").get<std::vector<int>>();
    for (int& v : z) {
      if (v < 1) throw DataError("truth labels must be 1-based");
      --v;
    }
    const int k = std::max(1, static_cast<int>(z.size()));
    t.assignment = ClusterAssignment(std::move(z), k);
    t.cov.sigma2 = j.at("sigma2").get<std::vector<double>>();
    t.cov.rho = j.at("rho").get<std::vector<double>>();
    t.coef.b = matrix_from_json(j.at("b"));
    return t;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<int, int>> rle_encode(std::span<const int> z) {
  std::vector<std::pair<int, int>> runs;
  for (int v : z) {
    if (!runs.empty() && runs.back().first == v) {
      ++runs.back().second;
    } else {
      runs.emplace_back(v, 1);
    }
  }
  return runs;
}

std::vector<int> rle_decode(std::span<const std::pair<int, int>> runs) {
  std::vector<int> z;
  for (const auto& [v, n] : runs) z.insert(z.end(), static_cast<std::size_t>(n), v);
  return z;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["m"] = m.m;
  j["n"] = m.n;
  j["p"] = m.p;
  j["k"] = m.k;
  j["kernel"] = m.kernel;
  j["status"] = m.status;
  j["config"] = m.config;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  try {
    json j;
    in >> j;
    Manifest m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.m = j.at("m").get<int>();
    m.n = j.at("n").get<int>();
    m.p = j.at("p").get<int>();
    m.k = j.at("k").get<int>();
    m.kernel = j.at("kernel").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string snapshot_to_json_line(const Snapshot& s) {
  ordered_json j;
  j["iteration"] = s.iteration;
  j["phase"] = to_string(s.phase);
  json runs = json::array();
  for (const auto& [v, n] : rle_encode(s.z)) runs.push_back({v + 1, n});
  j["z"] = runs;
  j["J"] = s.clusters();
  j["alpha"] = s.alpha;
  j["sigma2"] = s.sigma2;
  j["rho"] = s.rho;
  j["loglik"] = s.log_likelihood;
  if (s.b.size() > 0) j["b"] = matrix_to_json(s.b);
  return j.dump();
}

Snapshot snapshot_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    Snapshot s;
    s.iteration = j.at("iteration").get<long>();
    s.phase = parse_phase(j.at("phase").get<std::string>());
    std::vector<std::pair<int, int>> runs;
    for (const auto& r : j.at("z")) runs.emplace_back(r.at(0).get<int>() - 1, r.at(1).get<int>());
    s.z = rle_decode(runs);
    s.alpha = j.at("alpha").get<double>();
    s.sigma2 = j.at("sigma2").get<std::vector<double>>();
    s.rho = j.at("rho").get<std::vector<double>>();
    s.log_likelihood = j.at("loglik").get<double>();
    if (j.contains("b")) s.b = matrix_from_json(j.at("b"));
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed snapshot record: ") + e.what());
  }
}

ArchiveWriter::ArchiveWriter(const fs::path& dir, Manifest manifest)
    : dir_(dir), manifest_(std::move(manifest)) {
  fs::create_directories(dir_);
  write_manifest(dir_ / "manifest.json", manifest_);
  samples_ = open_out(dir_ / "samples.jsonl");
}

void ArchiveWriter::append(const Snapshot& snapshot) {
  if (snapshot.iteration <= last_iteration_) {
    throw DomainError("archive records must have strictly increasing iterations");
  }
  last_iteration_ = snapshot.iteration;
  samples_ << snapshot_to_json_line(snapshot) << '\n';
  samples_.flush();
}

void ArchiveWriter::finish(const std::string& status) {
  samples_.flush();
  manifest_.status = status;
  write_manifest(dir_ / "manifest.json", manifest_);
}

Archive read_archive(const fs::path& dir) {
  Archive a;
  a.dir = dir;
  a.manifest = read_manifest(dir / "manifest.json");
  auto in = open_in(dir / "samples.jsonl");
  std::string line;
  long last = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto s = snapshot_from_json_line(line);
    if (s.iteration <= last) throw DataError(dir.string() + ": iterations are not increasing");
    last = s.iteration;
    if (static_cast<int>(s.z.size()) != a.manifest.m) throw DataError(dir.string() + ": snapshot has wrong M");
    a.snapshots.push_back(std::move(s));
  }
  return a;
}

Dataset preprocess_timeseries(std::span<const Eigen::MatrixXd> subjects, int lag) {
  if (lag < 1) throw ConfigError("lag must be at least 1");
  if (subjects.empty()) throw DataError("no subject series supplied");
  const auto m = subjects.front().cols();
  std::vector<Eigen::Index> kept_rows;
  Eigen::Index total = 0;
  for (const auto& s : subjects) {
    if (s.cols() != m) throw DataError("subject series differ in the number of columns");
    const Eigen::Index kept = s.rows() / lag;
    if (kept == 0) throw DataError("a subject series is shorter than the lag");
    kept_rows.push_back(kept);
    total += kept;
  }

  Dataset d;
  d.outcomes.resize(total, m);
  d.covariates = Eigen::MatrixXd::Zero(total, static_cast<Eigen::Index>(subjects.size()));
  Eigen::Index row = 0;
  for (std::size_t l = 0; l < subjects.size(); ++l) {
    for (Eigen::Index t = 0; t < kept_rows[l]; ++t) {
      d.outcomes.row(row) = subjects[l].row((t + 1) * lag - 1);
      d.covariates(row, static_cast<Eigen::Index>(l)) = 1.0;
      ++row;
    }
  }
  if (!d.outcomes.allFinite()) throw DataError("subject series contain non-finite values");
  if (total < 2) throw DataError("fewer than two rows remain after thinning");

  for (Eigen::Index c = 0; c < m; ++c) {
    auto col = d.outcomes.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(total - 1));
    if (!(sd > 0.0)) throw DataError("outcome column " + std::to_string(c + 1) + " is constant");
    col /= sd;
  }
  return d;
}

}  // namespace covclust
