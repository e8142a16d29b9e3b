#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "subboot/bench/bench.hpp"

namespace subboot::bench {

namespace {

void fill_normal(Matrix<double>& X, Stream& stream) {
  std::normal_distribution<double> normal;
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) X(i, j) = normal(stream);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cell = cell.substr(start);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(v);
}

}  // namespace

double signed_log(double x) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::log(x) : -std::log(-x);
}

Dataset<double> generate_data(const DataSpec& spec, const SeedSpec& seed) {
  if (spec.generator == "values") {
    if (spec.values.size() < 2) throw ConfigError("values generator needs at least two values");
    Dataset<double> d;
    d.values = Eigen::Map<const Eigen::VectorXd>(spec.values.data(), static_cast<Index>(spec.values.size()));
    return d;
  }
  if (spec.N < 2) throw ConfigError("generator needs N >= 2");
  if (spec.p < 1) throw ConfigError("generator needs p >= 1");
  Stream stream = seed.stream(0, 0);
  Dataset<double> d;
  d.values.resize(spec.N, spec.p);
  if (spec.generator == "normal") {
    fill_normal(d.values, stream);
  } else if (spec.generator == "exponential" || spec.generator == "centered-exponential") {
    std::exponential_distribution<double> expo(1.0);
    for (Index i = 0; i < spec.N; ++i)
      for (Index j = 0; j < spec.p; ++j) d.values(i, j) = expo(stream) - 1.0;
  } else if (spec.generator == "two-point") {
    for (Index i = 0; i < spec.N; ++i)
      for (Index j = 0; j < spec.p; ++j) d.values(i, j) = (stream() >> 63) ? 1.0 : -1.0;
  } else if (spec.generator == "linear") {
    fill_normal(d.values, stream);
    std::normal_distribution<double> normal;
    d.response = d.values * Eigen::VectorXd::Constant(spec.p, 0.1);
    for (Index i = 0; i < spec.N; ++i) d.response(i) += normal(stream);
  } else if (spec.generator == "logistic") {
    fill_normal(d.values, stream);
    const Eigen::VectorXd eta = d.values * Eigen::VectorXd::Constant(spec.p, 0.5);
    d.response.resize(spec.N);
    for (Index i = 0; i < spec.N; ++i) {
      d.response(i) = stream.uniform01() < detail::logistic(eta(i)) ? 1.0 : 0.0;
    }
  } else {
    throw ConfigError("unknown generator: " + spec.generator);
  }
  return d;
}

CsvResult ingest_csv(const DataSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw IoError("cannot open " + spec.path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + spec.path);
  const auto header = split(line, spec.delimiter);
  auto find = [&](const std::string& name) -> Index {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<Index>(i);
    throw IoError("missing column '" + name + "' in " + spec.path);
  };
  std::vector<Index> value_cols;
  for (const auto& c : spec.columns) value_cols.push_back(find(c));
  if (value_cols.empty()) throw ConfigError("csv: no value columns selected");
  const Index resp = spec.response.empty() ? -1 : find(spec.response);
  const Index ind = spec.indicator.empty() ? -1 : find(spec.indicator);
  const bool slog = spec.transform == "signed-log";
  if (!slog && spec.transform != "none") throw ConfigError("unknown transform: " + spec.transform);

  std::vector<double> vals, resps, inds;
  CsvResult out;
  Index kept = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, spec.delimiter);
    auto cell = [&](Index c, double& v) {
      return c < static_cast<Index>(cells.size()) && parse_number(cells[static_cast<std::size_t>(c)], v);
    };
    std::vector<double> row;
    bool ok = true;
    for (Index c : value_cols) {
      double v = 0;
      ok = ok && cell(c, v);
      row.push_back(slog ? signed_log(v) : v);
    }
    double r = 0, w = 0;
    if (resp >= 0) ok = ok && cell(resp, r);
    if (ind >= 0) ok = ok && cell(ind, w) && (w == 0.0 || w == 1.0);
    if (!ok) {
      ++out.rejected;
      continue;
    }
    vals.insert(vals.end(), row.begin(), row.end());
    if (resp >= 0) resps.push_back(r);
    if (ind >= 0) inds.push_back(w);
    ++kept;
  }
  if (kept == 0) throw IoError("no data rows in " + spec.path);
  const auto p = static_cast<Index>(value_cols.size());
  out.data.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      vals.data(), kept, p);
  if (resp >= 0) out.data.response = Eigen::Map<const Eigen::VectorXd>(resps.data(), kept);
  if (ind >= 0) out.data.indicator = Eigen::Map<const Eigen::VectorXd>(inds.data(), kept);
  return out;
}

Dataset<double> load_data(const DataSpec& spec, const SeedSpec& seed) {
  Dataset<double> d = spec.generator == "csv" ? ingest_csv(spec).data : generate_data(spec, seed);
  d.validate();
  return d;
}

std::optional<MomentConstants<double>> population_moments(const DataSpec& spec) {
  double s2 = 0, s4 = 0;
  if (spec.generator == "normal") {
    s2 = 1;
    s4 = 3;
  } else if (spec.generator == "exponential" || spec.generator == "centered-exponential") {
    s2 = 1;
    s4 = 9;
  } else if (spec.generator == "two-point") {
    s2 = 1;
    s4 = 1;
  } else {
    return std::nullopt;
  }
  // Independent columns: sigma = I, sigma2 off-diagonal = s2 * s2.
  MomentConstants<double> m;
  m.N = spec.N;
  m.sigma = Matrix<double>::Identity(spec.p, spec.p) * s2;
  m.sigma2 = Matrix<double>::Constant(spec.p, spec.p, s2 * s2);
  m.sigma2.diagonal().setConstant(s4);
  return m;
}

}  // namespace subboot::bench
