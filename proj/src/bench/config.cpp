#include <fstream>
#include <random>

#include "subboot/bench/bench.hpp"

namespace subboot::bench {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

HyperParams parse_params(const Json& j) {
  HyperParams hp;
  hp.n = get_or<Index>(j, "n", 1);
  hp.R = get_or<Index>(j, "R", 1);
  hp.B = get_or<Index>(j, "B", 1);
  return hp;
}

template <typename T>
std::pair<T, T> parse_range(const Json& j, const char* key, std::pair<T, T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j[key].get<std::vector<T>>();
  if (v.size() != 2 || v[0] > v[1]) throw ConfigError(std::string(key) + " must be [low, high]");
  return {v[0], v[1]};
}

}  // namespace

Method parse_method(const std::string& name) {
  for (Method m : {Method::AF, Method::TB, Method::BLB, Method::SB, Method::SDB}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method: " + name);
}

Json cost_model_to_json(const CostModel& c) {
  Json j;
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["alpha_sb"] = c.alpha_sb;
  j["alpha_sdb"] = c.alpha_sdb;
  j["gamma"] = c.gamma;
  j["c_max"] = c.c_max;
  j["r_squared"] = c.r_squared;
  j["c0_blb"] = c.c0_blb;
  j["c0_sb"] = c.c0_sb;
  j["c0_sdb"] = c.c0_sdb;
  return j;
}

CostModel cost_model_from_json(const Json& j) {
  CostModel c;
  c.alpha1 = get_or<double>(j, "alpha1", 0);
  c.alpha2 = get_or<double>(j, "alpha2", 0);
  c.alpha_sb = get_or<double>(j, "alpha_sb", 0);
  c.alpha_sdb = get_or<double>(j, "alpha_sdb", 0);
  c.gamma = get_or<double>(j, "gamma", 1);
  c.c_max = get_or<double>(j, "c_max", 0);
  c.r_squared = get_or<double>(j, "r_squared", 0);
  c.c0_blb = get_or<double>(j, "c0_blb", 0);
  c.c0_sb = get_or<double>(j, "c0_sb", 0);
  c.c0_sdb = get_or<double>(j, "c0_sdb", 0);
  if (!(c.alpha1 > 0 && c.alpha2 > 0 && c.alpha_sb > 0 && c.alpha_sdb > 0)) {
    throw ConfigError("cost model: every alpha must be positive");
  }
  if (c.gamma < 1) throw ConfigError("cost model: gamma must be at least 1");
  return c;
}

CostModel load_cost_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cost model " + path);
  try {
    return cost_model_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError("cost model " + path + ": " + e.what());
  }
}

void save_cost_model(const CostModel& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << cost_model_to_json(c).dump(2) << "\n";
}

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.workers = get_or<int>(j, "workers", 1);

  if (j.contains("data")) {
    const Json& d = j["data"];
    auto& s = cfg.data;
    s.generator = get_or<std::string>(d, "generator", s.generator);
    s.N = get_or<Index>(d, "N", s.N);
    s.p = get_or<Index>(d, "p", s.p);
    s.values = get_or<std::vector<double>>(d, "values", {});
    s.path = get_or<std::string>(d, "path", "");
    s.columns = get_or<std::vector<std::string>>(d, "columns", {});
    s.response = get_or<std::string>(d, "response", "");
    s.indicator = get_or<std::string>(d, "indicator", "");
    s.transform = get_or<std::string>(d, "transform", "none");
    const auto delim = get_or<std::string>(d, "delimiter", ",");
    if (delim.size() != 1) throw ConfigError("delimiter must be one character");
    s.delimiter = delim[0];
    if (s.generator == "values") s.N = static_cast<Index>(s.values.size());
  }
  cfg.estimator = get_or<std::string>(j, "estimator", cfg.estimator);
  make_estimator<double>(cfg.estimator);  // validates the name

  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (j.contains("params")) cfg.params = parse_params(j["params"]);
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    cfg.grid.n_exponents = get_or<std::vector<double>>(g, "n_exponents", {});
    cfg.grid.n = get_or<std::vector<Index>>(g, "n", {});
    cfg.grid.B = get_or<std::vector<Index>>(g, "B", {});
    cfg.grid.R = get_or<std::vector<Index>>(g, "R", {});
  }
  cfg.M = get_or<Index>(j, "M", cfg.M);
  if (cfg.M < 1) throw ConfigError("M must be at least 1");
  cfg.truth = get_or<std::string>(j, "truth", cfg.truth);
  if (cfg.truth != "analytic" && cfg.truth != "monte-carlo") throw ConfigError("truth must be analytic or monte-carlo");

  if (j.contains("timer")) {
    const Json& t = j["timer"];
    auto& s = cfg.timer;
    s.mode = get_or<std::string>(t, "mode", s.mode);
    if (s.mode != "wall" && s.mode != "model") throw ConfigError("timer mode must be wall or model");
    s.alpha1 = get_or<double>(t, "alpha1", s.alpha1);
    s.alpha2 = get_or<double>(t, "alpha2", s.alpha2);
    s.alpha_sb = get_or<double>(t, "alpha_sb", s.alpha_sb);
    s.alpha_sdb = get_or<double>(t, "alpha_sdb", s.alpha_sdb);
    s.gamma = get_or<double>(t, "gamma", s.gamma);
    s.noise = get_or<double>(t, "noise", s.noise);
  }
  if (j.contains("calibration")) {
    const Json& c = j["calibration"];
    auto& s = cfg.calibration;
    s.points = get_or<int>(c, "points", s.points);
    s.r_max = get_or<Index>(c, "R_max", s.r_max);
    s.b_max = get_or<Index>(c, "B_max", s.b_max);
    s.repeats = get_or<int>(c, "repeats", s.repeats);
    if (c.contains("n")) s.n = c["n"].get<Index>();
    s.pilot_units = get_or<double>(c, "pilot_units", s.pilot_units);
    s.rounds = get_or<int>(c, "rounds", s.rounds);
  }
  if (j.contains("budget")) {
    const Json& b = j["budget"];
    if (b.contains("c_max")) cfg.c_max = b["c_max"].get<double>();
    if (b.contains("reference")) cfg.reference = parse_params(b["reference"]);
    if (cfg.c_max.has_value() == cfg.reference.has_value()) {
      throw ConfigError("budget needs exactly one of c_max or reference");
    }
    if (cfg.c_max && !(*cfg.c_max > 0)) throw ConfigError("c_max must be positive");
  }
  if (j.contains("comparison")) {
    const Json& c = j["comparison"];
    auto& s = cfg.comparison;
    s.settings = get_or<int>(c, "settings", s.settings);
    s.r_range = parse_range<Index>(c, "R_range", s.r_range);
    s.b_range = parse_range<Index>(c, "B_range", s.b_range);
    s.M0 = get_or<Index>(c, "M0", s.M0);
  }
  if (j.contains("cost_model")) {
    const Json& c = j["cost_model"];
    cfg.cost_model = c.is_string() ? load_cost_model(c.get<std::string>()) : cost_model_from_json(c);
  }
  cfg.cost_model_out = get_or<std::string>(j, "cost_model_out", "");
  cfg.paper_literal = get_or<bool>(j, "paper_literal", false);
  cfg.verbose = get_or<bool>(j, "verbose", false);
  if (j.contains("output")) {
    cfg.output_path = get_or<std::string>(j["output"], "path", "");
    cfg.format = parse_format(get_or<std::string>(j["output"], "format", "csv"));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return parse_config(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

double Timer::seconds(Method method, Index N, const HyperParams& hp, const VarianceEstimate<double>& run) {
  if (!is_model()) return run.seconds;
  const double g = spec_.gamma;
  const double n = static_cast<double>(hp.n), R = static_cast<double>(hp.R), B = static_cast<double>(hp.B);
  double t = 0;
  switch (method) {
    case Method::BLB: t = spec_.alpha1 * std::pow(n, g) * R * B + spec_.alpha2 * n * R; break;
    case Method::SB: t = spec_.alpha_sb * std::pow(n, g) * R; break;
    case Method::SDB: t = spec_.alpha_sdb * std::pow(n, g) * R; break;
    case Method::TB: t = spec_.alpha_sb * std::pow(static_cast<double>(N), g) * B; break;
    case Method::AF: t = spec_.alpha_sb * static_cast<double>(N); break;
  }
  if (spec_.noise > 0) {
    Stream stream = seed_.stream(calls_, 0);
    std::normal_distribution<double> z;
    t *= std::max(0.0, 1.0 + spec_.noise * z(stream));
  }
  ++calls_;
  return t;
}

}  // namespace subboot::bench
