#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "subboot/bench/bench.hpp"

namespace subboot::bench {

namespace {

// Seed layout under the root: one derive(tag, index) branch per purpose.
enum SeedTag : std::uint64_t {
  kDataTag = 1,
  kEngineTag = 2,
  kCalibrationTag = 3,
  kTimerTag = 4,
  kPilotDataTag = 5,
  kTruthTag = 6,
  kSettingsTag = 7,
  kCompareTag = 100,
};

std::uint64_t method_index(Method m) { return static_cast<std::uint64_t>(m); }

void log(const ExperimentConfig& cfg, const std::string& line) {
  if (cfg.verbose) std::cerr << line << std::endl;
}

Json metadata(const ExperimentConfig& cfg, const std::string& verb) {
  Json echo = cfg.raw;
  echo.erase("workers");
  echo.erase("output");
  echo.erase("verbose");
  echo["seed"] = cfg.seed;
  Json meta;
  meta["verb"] = verb;
  meta["version"] = kVersion;
  meta["seed"] = cfg.seed;
  meta["generator"] = kGeneratorName;
  meta["config"] = echo;
  return meta;
}

Json constants_json(const MseConstants& c) {
  Json j;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  j["c3"] = c.c3;
  j["c4"] = c.c4;
  return j;
}

// Engines run single-threaded whenever the clock is real.
EngineOptions timed_options(const ExperimentConfig& cfg, const Timer& timer) {
  EngineOptions opt;
  opt.workers = timer.is_model() ? cfg.workers : 1;
  return opt;
}

HyperParams for_method(Method m, HyperParams hp) {
  if (m == Method::SB || m == Method::SDB) hp.B = 1;
  return hp;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string name(Method m) { return std::string(to_string(m)); }

std::int64_t I(Index v) { return static_cast<std::int64_t>(v); }

std::optional<double> budget_from(const ExperimentConfig& cfg, const CostModel& cost) {
  if (cfg.c_max) return cfg.c_max;
  if (cfg.reference) {
    const auto& r = *cfg.reference;
    return blb_cost(r.n, r.R, r.B, cost.alpha1, cost.alpha2, cost.gamma);
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// run

Report run_single(const ExperimentConfig& cfg) {
  const SeedSpec root{cfg.seed};
  const auto data = load_data(cfg.data, root.derive(kDataTag, 0));
  const auto est = make_estimator<double>(cfg.estimator);
  Timer timer(cfg.timer, root.derive(kTimerTag, 0));
  const EngineOptions opt = timed_options(cfg, timer);

  Report report;
  report.title = "run";
  report.metadata = metadata(cfg, "run");
  std::vector<std::vector<Cell>> rows;
  Index d = 0;
  for (Method m : cfg.methods) {
    const HyperParams hp = for_method(m, cfg.params);
    const SeedSpec seed = root.derive(kEngineTag, method_index(m));
    const auto r = run_engine(m, data, est, hp, seed, opt);
    d = r.matrix.rows();
    std::vector<Cell> row{name(m), I(r.params.n), I(r.params.R), I(r.params.B), std::to_string(seed.root),
                          I(r.units), I(r.skipped), timer.seconds(m, data.rows(), r.params, r)};
    for (Index i = 0; i < d; ++i)
      for (Index j = i; j < d; ++j) row.emplace_back(r.matrix(i, j));
    rows.push_back(std::move(row));
  }
  report.columns = {"method", "n", "R", "B", "seed", "units", "skipped", "seconds"};
  for (Index i = 0; i < d; ++i)
    for (Index j = i; j < d; ++j) report.columns.push_back("cov[" + std::to_string(i) + "," + std::to_string(j) + "]");
  report.rows = std::move(rows);
  return report;
}

// ---------------------------------------------------------------------------
// calibrate

MseConstants estimator_constants(const EstimatorSpec<double>& est, const Dataset<double>& data,
                                 const SeedSpec& seed) {
  const auto spec = prepared(est, data, seed.derive(kPilotTag));
  return mse_constants(central_moments(influence_values(spec, data)));
}

CalibrationOutcome calibrate_all(const Dataset<double>& data, const EstimatorSpec<double>& est,
                                 const ExperimentConfig& cfg, Timer& timer, std::optional<double> c_max,
                                 std::optional<HyperParams> reference) {
  const SeedSpec root{cfg.seed};
  const Index N = data.rows();
  const Index n0 = std::clamp<Index>(cfg.calibration.n.value_or(default_blb_n(N)), 1, N);
  const double gamma = est.gamma;
  const EngineOptions opt = timed_options(cfg, timer);
  std::uint64_t calls = 0;

  auto runner = [&](Method m) -> PilotRunner {
    return [&, m](const HyperParams& hp) {
      const auto r = run_engine(m, data, est, hp, root.derive(kCalibrationTag, ++calls), opt);
      return timer.seconds(m, N, hp, r);
    };
  };

  CalibrationOutcome out;
  const auto grid = blb_pilot_grid(n0, root.derive(kCalibrationTag, 0), cfg.calibration.points,
                                   cfg.calibration.r_max, cfg.calibration.b_max);
  const double warmup = runner(Method::BLB)(grid.front());
  out.blb = calibrate_blb(runner(Method::BLB), grid, cfg.calibration.repeats, gamma);
  out.blb.pilot_seconds += warmup;
  log(cfg, "calibrate: BLB alpha1=" + format_number(out.blb.alpha1) + " alpha2=" + format_number(out.blb.alpha2) +
               " R2=" + format_number(out.blb.r_squared));

  if (!c_max && reference) c_max = blb_cost(reference->n, reference->R, reference->B, out.blb.alpha1, out.blb.alpha2, gamma);
  const MseConstants c = estimator_constants(est, data, root);
  const TunerOptions topt{cfg.paper_literal};

  const Index r0 = std::max<Index>(1, detail::ceil_index(cfg.calibration.pilot_units / static_cast<double>(n0)));
  const std::vector<HyperParams> initial{{n0, r0, 1, Provenance::Default}, {n0, 2 * r0, 1, Provenance::Default}};
  auto linear = [&](Method m) {
    std::function<Index(double)> candidate;
    if (c_max) {
      candidate = [&, m](double alpha) {
        try {
          return optimal_sb_sdb(m, c, alpha, *c_max, N, gamma, topt).params.n;
        } catch (const Error&) {
          return n0;
        }
      };
    }
    auto cal = calibrate_linear(runner(m), initial, candidate, cfg.calibration.rounds, 1, N, cfg.calibration.repeats,
                                gamma, cfg.calibration.pilot_units);
    log(cfg, "calibrate: " + name(m) + " alpha=" + format_number(cal.alpha) + " rounds=" +
                 std::to_string(cal.rounds));
    return cal;
  };
  out.sb = linear(Method::SB);
  out.sdb = linear(Method::SDB);

  auto& model = out.model;
  model.alpha1 = out.blb.alpha1;
  model.alpha2 = out.blb.alpha2;
  model.alpha_sb = out.sb.alpha;
  model.alpha_sdb = out.sdb.alpha;
  model.gamma = gamma;
  model.c_max = c_max.value_or(0.0);
  model.r_squared = out.blb.r_squared;
  model.c0_blb = out.blb.pilot_seconds;
  model.c0_sb = out.sb.pilot_seconds;
  model.c0_sdb = out.sdb.pilot_seconds;
  if (!(model.alpha1 > 0.0) || !(model.alpha2 > 0.0)) {
    throw CalibrationError("calibration produced a non-positive BLB coefficient (alpha1=" +
                           format_number(model.alpha1) + ", alpha2=" + format_number(model.alpha2) + ")");
  }
  return out;
}

Report run_calibrate(const ExperimentConfig& cfg) {
  const SeedSpec root{cfg.seed};
  const auto data = load_data(cfg.data, root.derive(kDataTag, 0));
  const auto est = make_estimator<double>(cfg.estimator);
  Timer timer(cfg.timer, root.derive(kTimerTag, 0));
  const auto out = calibrate_all(data, est, cfg, timer, cfg.c_max, cfg.reference);
  if (!cfg.cost_model_out.empty()) save_cost_model(out.model, cfg.cost_model_out);

  Report report;
  report.title = "calibrate";
  report.metadata = metadata(cfg, "calibrate");
  report.metadata["cost_model"] = cost_model_to_json(out.model);
  report.metadata["alpha_sb_history"] = out.sb.history;
  report.metadata["alpha_sdb_history"] = out.sdb.history;
  report.columns = {"method", "n", "R", "B", "seconds"};
  auto add = [&](Method m, const std::vector<PilotObservation>& obs) {
    for (const auto& o : obs) {
      report.rows.push_back({name(m), I(o.params.n), I(o.params.R), I(o.params.B), o.seconds});
    }
  };
  add(Method::BLB, out.blb.observations);
  add(Method::SB, out.sb.observations);
  add(Method::SDB, out.sdb.observations);
  return report;
}

// ---------------------------------------------------------------------------
// tune

Report run_tune(const ExperimentConfig& cfg) {
  const SeedSpec root{cfg.seed};
  const auto data = load_data(cfg.data, root.derive(kDataTag, 0));
  const auto est = make_estimator<double>(cfg.estimator);
  const Index N = data.rows();
  const MseConstants c = estimator_constants(est, data, root);

  CostModel cost;
  bool calibrated = false;
  if (cfg.cost_model) {
    cost = *cfg.cost_model;
  } else {
    Timer timer(cfg.timer, root.derive(kTimerTag, 0));
    cost = calibrate_all(data, est, cfg, timer, cfg.c_max, cfg.reference).model;
    calibrated = true;
  }
  const auto budget = budget_from(cfg, cost);
  if (!budget) throw ConfigError("tune needs a budget (c_max or reference)");

  Report report;
  report.title = "tune";
  report.metadata = metadata(cfg, "tune");
  report.metadata["cost_model"] = cost_model_to_json(cost);
  report.metadata["constants"] = constants_json(c);
  report.metadata["c_max"] = *budget;
  report.columns = {"method", "n", "R", "B", "budget", "predicted_mse", "predicted_time", "slack", "status"};
  const TunerOptions topt{cfg.paper_literal};
  for (Method m : cfg.methods) {
    if (m != Method::BLB && m != Method::SB && m != Method::SDB) continue;
    double c0 = 0;
    if (calibrated) c0 = m == Method::BLB ? cost.c0_blb : m == Method::SB ? cost.c0_sb : cost.c0_sdb;
    const double avail = *budget - c0;
    try {
      if (!(avail > 0.0)) throw InfeasibleBudgetError("pilot runs used the whole budget", 0.0);
      const auto t = optimal_general(m, c, cost, avail, N, cfg.calibration.n, topt);
      report.rows.push_back({name(m), I(t.params.n), I(t.params.R), I(t.params.B), avail, t.predicted_mse,
                             t.predicted_time, t.slack, t.warnings.empty() ? "ok" : join(t.warnings, "; ")});
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      report.rows.push_back({name(m), I(0), I(0), I(0), avail, nan, nan, nan, std::string(e.what())});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// verify-mse

namespace {

struct Job {
  Method method;
  HyperParams hp;
};

Index find_job(const std::vector<Job>& jobs, Method m, const HyperParams& hp) {
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (jobs[j].method != m) continue;
    const auto& h = jobs[j].hp;
    const bool match = m == Method::AF || (m == Method::TB && h.B == hp.B) ||
                       ((m == Method::SB || m == Method::SDB) && h.n == hp.n && h.R == hp.R) ||
                       (m == Method::BLB && h == hp);
    if (match) return static_cast<Index>(j);
  }
  return -1;
}

}  // namespace

Report run_mse_verification(const ExperimentConfig& cfg) {
  const SeedSpec root{cfg.seed};
  const auto est = make_estimator<double>(cfg.estimator);
  const auto first = load_data(cfg.data, root.derive(kDataTag, 0));
  const Index N = first.rows();

  std::vector<Index> ns = cfg.grid.n;
  for (double e : cfg.grid.n_exponents) ns.push_back(std::clamp<Index>(detail::floor_index(std::pow(double(N), e)), 1, N));
  std::vector<Index> Bs = cfg.grid.B.empty() ? std::vector<Index>{cfg.params.B} : cfg.grid.B;
  std::vector<Index> Rs = cfg.grid.R.empty() ? std::vector<Index>{cfg.params.R} : cfg.grid.R;
  if (ns.empty()) ns.push_back(cfg.params.n);

  // Distinct engine runs per dataset.
  std::vector<Job> jobs;
  auto add_job = [&](Method m, HyperParams hp) {
    if (find_job(jobs, m, hp) < 0) jobs.push_back({m, hp});
  };
  for (Method m : cfg.methods) {
    for (Index n : ns)
      for (Index B : Bs)
        for (Index R : Rs) {
          HyperParams hp{n, R, B, Provenance::User};
          if (m == Method::AF) hp = {N, 1, 1, Provenance::Default};
          if (m == Method::TB) hp = {N, 1, B, Provenance::User};
          add_job(m, for_method(m, hp));
        }
  }

  // Constants for the prediction: population moments when known.
  const auto population = population_moments(cfg.data);
  const bool use_population = population && cfg.estimator == "mean";
  const MseConstants c = use_population ? mse_constants(*population) : estimator_constants(est, first, root);
  bool degenerate = false;
  try {
    if (use_population && population->dim() == 1) {
      univariate_tilde_constants(*population);
    } else {
      tilde_constants(c);
    }
  } catch (const DegenerateKurtosisError&) {
    degenerate = true;
  }

  const Index M = cfg.M;
  std::vector<std::vector<Matrix<double>>> results(static_cast<std::size_t>(M));
  std::vector<std::vector<std::string>> errors(static_cast<std::size_t>(M));
  std::vector<Vector<double>> thetas(static_cast<std::size_t>(M));
  const EngineOptions opt;  // workers spent across m instead
  parallel_for(M, resolve_workers(cfg.workers), [] { return 0; }, [&](int&, Index m) {
    const auto mm = static_cast<std::size_t>(m);
    const auto data = m == 0 ? first : load_data(cfg.data, root.derive(kDataTag, static_cast<std::uint64_t>(m)));
    results[mm].resize(jobs.size());
    errors[mm].resize(jobs.size());
    const SeedSpec engine_root = root.derive(kEngineTag, static_cast<std::uint64_t>(m));
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      try {
        const SeedSpec seed = engine_root.derive(method_index(jobs[j].method), 0);
        results[mm][j] = run_engine(jobs[j].method, data, est, jobs[j].hp, seed, opt).matrix;
      } catch (const Error& e) {
        errors[mm][j] = e.what();
      }
    }
    if (cfg.truth == "monte-carlo") thetas[mm] = evaluate(prepared(est, data, engine_root.derive(kPilotTag)), data);
  });

  Matrix<double> truth;
  std::string truth_kind;
  if (cfg.truth == "monte-carlo") {
    if (M < 2) throw ConfigError("monte-carlo truth needs M >= 2");
    Vector<double> mean = Vector<double>::Zero(thetas.front().size());
    for (const auto& t : thetas) mean += t;
    mean /= static_cast<double>(M);
    truth.setZero(mean.size(), mean.size());
    for (const auto& t : thetas) truth += (t - mean) * (t - mean).transpose();
    truth /= static_cast<double>(M);
    truth_kind = "monte-carlo";
  } else if (use_population) {
    truth = population->sigma / static_cast<double>(N);
    truth_kind = "analytic sigma/N";
  } else if (cfg.data.generator == "linear" && cfg.estimator == "ols") {
    truth = Matrix<double>::Identity(cfg.data.p, cfg.data.p) / static_cast<double>(N);
    truth_kind = "analytic I/N";
  } else {
    throw ConfigError("no analytic truth for this generator and estimator; use truth = monte-carlo");
  }

  std::vector<double> empirical(jobs.size(), 0.0);
  std::vector<std::string> job_error(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (std::size_t m = 0; m < results.size(); ++m) {
      if (!errors[m][j].empty()) {
        if (job_error[j].empty()) job_error[j] = errors[m][j];
        continue;
      }
      empirical[j] += (results[m][j] - truth).squaredNorm();
    }
    empirical[j] /= static_cast<double>(M);
  }

  Report report;
  report.title = "verify-mse";
  report.metadata = metadata(cfg, "verify-mse");
  report.metadata["N"] = N;
  report.metadata["truth"] = truth_kind;
  report.metadata["constants"] = constants_json(c);
  report.metadata["constants_source"] = use_population ? "population" : "sample influence values";
  report.columns = {"n", "B", "R"};
  for (Method m : cfg.methods) report.columns.push_back(name(m));
  for (Method m : cfg.methods) {
    report.columns.push_back(name(m) + " predicted");
    report.columns.push_back(name(m) + " empirical");
  }
  report.columns.push_back("status");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index n : ns)
    for (Index B : Bs)
      for (Index R : Rs) {
        std::vector<Cell> row{I(n), I(B), I(R)};
        std::vector<Cell> raw;
        std::vector<std::string> status;
        if (degenerate) status.emplace_back("degenerate-kurtosis");
        for (Method m : cfg.methods) {
          const HyperParams hp = for_method(m, {n, R, B, Provenance::User});
          const Index j = find_job(jobs, m, hp);
          const auto jj = static_cast<std::size_t>(j);
          double pred = nan, emp = nan, ratio = nan;
          if (!job_error[jj].empty()) {
            status.push_back(name(m) + ": " + job_error[jj]);
          } else {
            try {
              pred = predict_mse(m, N, jobs[jj].hp, c).total;
              emp = empirical[jj];
              ratio = guarded_ratio(pred, emp);
            } catch (const Error& e) {
              status.push_back(name(m) + ": " + e.what());
            }
          }
          row.emplace_back(ratio);
          raw.emplace_back(pred);
          raw.emplace_back(emp);
        }
        row.insert(row.end(), raw.begin(), raw.end());
        row.emplace_back(status.empty() ? std::string("ok") : join(status, "; "));
        report.rows.push_back(std::move(row));
      }
  return report;
}

// ---------------------------------------------------------------------------
// compare

namespace {

enum Slot { kBlb, kSdb, kSb, kBlbStar, kSdbStar, kSbStar };
constexpr std::array<const char*, 6> kSlotNames{"BLB", "SDB", "SB", "BLB*", "SDB*", "SB*"};
constexpr std::array<Method, 6> kSlotMethods{Method::BLB, Method::SDB, Method::SB,
                                             Method::BLB, Method::SDB, Method::SB};
// kappa_i = numerator / denominator
constexpr std::array<std::pair<Slot, Slot>, 5> kKappa{
    {{kBlbStar, kBlb}, {kSdbStar, kSdb}, {kSbStar, kSb}, {kBlbStar, kSdbStar}, {kBlbStar, kSbStar}}};

Matrix<double> logistic_truth(const ExperimentConfig& cfg, const SeedSpec& root) {
  const Index M0 = cfg.comparison.M0;
  std::vector<Matrix<double>> parts(static_cast<std::size_t>(M0));
  parallel_for(M0, resolve_workers(cfg.workers), [] { return 0; }, [&](int&, Index m) {
    const auto data = load_data(cfg.data, root.derive(kTruthTag, static_cast<std::uint64_t>(m)));
    const Vector<double> beta = logistic_mle(data);
    const Index p = data.cols();
    Matrix<double> info = Matrix<double>::Zero(p, p);
    for (Index i = 0; i < data.rows(); ++i) {
      const double pr = detail::logistic(data.values.row(i).dot(beta));
      info.noalias() += pr * (1.0 - pr) * data.values.row(i).transpose() * data.values.row(i);
    }
    parts[static_cast<std::size_t>(m)] = info.ldlt().solve(Matrix<double>::Identity(p, p));
  });
  Matrix<double> truth = Matrix<double>::Zero(parts.front().rows(), parts.front().cols());
  for (const auto& p : parts) truth += p;
  return truth / static_cast<double>(M0);
}

}  // namespace

ComparisonResult run_budget_comparison(const ExperimentConfig& cfg) {
  const SeedSpec root{cfg.seed};
  const auto est = make_estimator<double>(cfg.estimator);
  const bool from_file = cfg.data.generator == "csv";
  const Index M = cfg.M;
  Timer timer(cfg.timer, root.derive(kTimerTag, 0));
  const EngineOptions opt = timed_options(cfg, timer);

  std::array<bool, 3> enabled{false, false, false};
  for (const auto& name : cfg.comparison.methods) {
    const Method m = parse_method(name);
    if (m == Method::BLB) enabled[kBlb] = true;
    else if (m == Method::SDB) enabled[kSdb] = true;
    else if (m == Method::SB) enabled[kSb] = true;
    else throw ConfigError("comparison methods are BLB, SDB and SB");
  }
  if (!enabled[kBlb]) throw ConfigError("comparison needs BLB: it sets the budget");

  // Datasets, pilot data and truth.
  std::vector<Dataset<double>> datasets;
  if (from_file) {
    datasets.push_back(load_data(cfg.data, root.derive(kDataTag, 0)));
  } else {
    for (Index m = 0; m < M; ++m) datasets.push_back(load_data(cfg.data, root.derive(kDataTag, static_cast<std::uint64_t>(m))));
  }
  auto dataset = [&](Index m) -> const Dataset<double>& { return datasets[from_file ? 0 : static_cast<std::size_t>(m)]; };
  const Dataset<double> pilot = from_file ? datasets.front() : load_data(cfg.data, root.derive(kPilotDataTag, 0));
  const Index N = pilot.rows();
  const Index n0 = std::clamp<Index>(cfg.calibration.n.value_or(default_blb_n(N)), 1, N);

  Matrix<double> truth;
  std::string truth_kind;
  const auto population = population_moments(cfg.data);
  if (from_file) {
    EngineOptions topt;
    topt.workers = resolve_workers(cfg.workers);
    truth = tb_variance(pilot, est, cfg.comparison.M0, root.derive(kTruthTag, 0), topt).matrix;
    truth_kind = "traditional bootstrap, B = " + std::to_string(cfg.comparison.M0);
  } else if (cfg.data.generator == "linear" && cfg.estimator == "ols") {
    truth = Matrix<double>::Identity(cfg.data.p, cfg.data.p) / static_cast<double>(N);
    truth_kind = "analytic I/N";
  } else if (cfg.data.generator == "logistic" && cfg.estimator == "logit1") {
    truth = logistic_truth(cfg, root);
    truth_kind = "mean inverse information, M0 = " + std::to_string(cfg.comparison.M0);
  } else if (population && cfg.estimator == "mean") {
    truth = population->sigma / static_cast<double>(N);
    truth_kind = "analytic sigma/N";
  } else {
    throw ConfigError("no truth construction for this generator and estimator");
  }
  log(cfg, "compare: truth ready (" + truth_kind + ")");

  // Original settings.
  std::vector<std::pair<Index, Index>> settings;
  {
    Stream s = root.stream(kSettingsTag, 0);
    const auto [r_lo, r_hi] = cfg.comparison.r_range;
    const auto [b_lo, b_hi] = cfg.comparison.b_range;
    for (int i = 0; i < cfg.comparison.settings; ++i) {
      const Index R = r_lo + static_cast<Index>(s.below(static_cast<std::uint64_t>(r_hi - r_lo + 1)));
      const Index B = b_lo + static_cast<Index>(s.below(static_cast<std::uint64_t>(b_hi - b_lo + 1)));
      settings.emplace_back(R, B);
    }
  }

  const MseConstants c = estimator_constants(est, pilot, root);
  CostModel cost;
  double alpha_ref_sb = 0, alpha_ref_sdb = 0;
  if (cfg.cost_model) {
    cost = *cfg.cost_model;
    alpha_ref_sb = cost.alpha_sb;
    alpha_ref_sdb = cost.alpha_sdb;
  } else {
    double r_mean = 0, b_mean = 0;
    for (const auto& [R, B] : settings) {
      r_mean += static_cast<double>(R);
      b_mean += static_cast<double>(B);
    }
    const auto k = static_cast<double>(std::max<std::size_t>(1, settings.size()));
    const HyperParams reference{n0, std::max<Index>(1, std::llround(r_mean / k)), std::max<Index>(1, std::llround(b_mean / k)),
                                Provenance::Default};
    const auto cal = calibrate_all(pilot, est, cfg, timer, cfg.c_max, reference);
    cost = cal.model;
    alpha_ref_sb = cal.sb.history.front();
    alpha_ref_sdb = cal.sdb.history.front();
  }
  const std::array<double, 3> c0{cost.c0_blb, cost.c0_sdb, cost.c0_sb};
  const TunerOptions topt{cfg.paper_literal};

  ComparisonResult result;
  result.cost = cost;
  result.constants = c;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t s = 0; s < settings.size(); ++s) {
    ComparisonRow row;
    row.R = settings[s].first;
    row.B = settings[s].second;
    row.mse.fill(nan);
    row.time.fill(nan);
    row.mse_kappa.fill(nan);
    row.time_kappa.fill(nan);
    std::vector<std::string> notes;

    // Runs the given slots over the M repeats. Slots are interleaved within
    // each repeat so that slow phases of the host hit all of them alike.
    auto run_slots = [&](const std::vector<std::pair<int, HyperParams>>& slots) {
      std::vector<double> mse(slots.size(), 0.0), time(slots.size(), 0.0);
      for (Index i = 0; i < M; ++i) {
        for (std::size_t k = 0; k < slots.size(); ++k) {
          const auto& [slot, hp] = slots[k];
          const Method m = kSlotMethods[static_cast<std::size_t>(slot)];
          const SeedSpec seed =
              root.derive(kCompareTag + static_cast<std::uint64_t>(slot), s * 100000 + static_cast<std::uint64_t>(i));
          const auto r = run_engine(m, dataset(i), est, hp, seed, opt);
          mse[k] += (r.matrix - truth).norm();
          time[k] += timer.seconds(m, N, hp, r);
        }
      }
      for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto slot = static_cast<std::size_t>(slots[k].first);
        row.params[slot] = slots[k].second;
        row.mse[slot] = mse[k] / static_cast<double>(M);
        row.time[slot] = time[k] / static_cast<double>(M) + (slot >= kBlbStar ? c0[slot - kBlbStar] : 0.0);
      }
    };

    try {
      run_slots({{kBlb, {n0, row.R, row.B, Provenance::User}}});
      row.c_max = row.time[kBlb];
      const double ng = std::pow(static_cast<double>(n0), cost.gamma);
      // The original BLB is timed again alongside the others; same seeds, so
      // its estimates are unchanged and C_max stays the first measurement.
      std::vector<std::pair<int, HyperParams>> slots{{kBlb, row.params[kBlb]}};
      if (enabled[kSdb]) {
        const Index R = std::max<Index>(1, detail::floor_index(row.c_max / (alpha_ref_sdb * ng)));
        slots.push_back({kSdb, {n0, R, 1, Provenance::User}});
      }
      if (enabled[kSb]) {
        const Index R = std::max<Index>(1, detail::floor_index(row.c_max / (alpha_ref_sb * ng)));
        slots.push_back({kSb, {n0, R, 1, Provenance::User}});
      }
      for (int slot : {kBlbStar, kSdbStar, kSbStar}) {
        const std::size_t base = static_cast<std::size_t>(slot - 3);
        if (!enabled[base]) continue;
        const double avail = row.c_max - c0[base];
        if (!(avail > 0.0)) throw InfeasibleBudgetError("pilot runs exceed the BLB budget", c0[base]);
        const Method m = kSlotMethods[static_cast<std::size_t>(slot)];
        const auto t = m == Method::BLB ? optimal_blb(tilde_constants(c), cost.alpha1, cost.alpha2, avail, N, n0, cost.gamma, topt)
                                        : optimal_general(m, c, cost, avail, N, std::nullopt, topt);
        for (const auto& w : t.warnings) notes.push_back(std::string(kSlotNames[static_cast<std::size_t>(slot)]) + ": " + w);
        slots.push_back({slot, t.params});
      }
      run_slots(slots);
      for (int slot : {kBlbStar, kSdbStar, kSbStar}) {
        const auto k = static_cast<std::size_t>(slot);
        if (!enabled[k - 3] || !(row.time[k] > 1.15 * row.c_max)) continue;
        notes.push_back(std::string(kSlotNames[k]) + " over budget");
        std::cerr << "warning: " << kSlotNames[k] << " used " << format_number(row.time[k] / row.c_max) << " x C_max\n";
      }
    } catch (const Error& e) {
      row.status = e.what();
    }
    for (std::size_t k = 0; k < kKappa.size(); ++k) {
      const auto [a, b] = kKappa[k];
      row.mse_kappa[k] = row.mse[a] / row.mse[b];
      row.time_kappa[k] = row.time[a] / row.time[b];
    }
    if (row.status == "ok" && !notes.empty()) row.status = "ok; " + join(notes, "; ");
    log(cfg, "compare: setting " + std::to_string(s + 1) + "/" + std::to_string(settings.size()) + " (R=" +
                 std::to_string(row.R) + ", B=" + std::to_string(row.B) + ") kappa1=" +
                 format_number(row.mse_kappa[0]) + " kappa4=" + format_number(row.mse_kappa[3]));
    result.rows.push_back(row);
  }

  Report& report = result.report;
  report.title = "compare";
  report.metadata = metadata(cfg, "compare");
  report.metadata["N"] = N;
  report.metadata["n0"] = n0;
  report.metadata["truth"] = truth_kind;
  report.metadata["timer"] = cfg.timer.mode;
  report.metadata["cost_model"] = cost_model_to_json(cost);
  report.metadata["alpha_ref_sb"] = alpha_ref_sb;
  report.metadata["alpha_ref_sdb"] = alpha_ref_sdb;
  report.metadata["constants"] = constants_json(c);
  report.columns = {"setting", "seed", "R", "B"};
  for (int k = 1; k <= 5; ++k) report.columns.push_back("MSE k" + std::to_string(k));
  for (int k = 1; k <= 5; ++k) report.columns.push_back("Time k" + std::to_string(k));
  report.columns.push_back("C_max");
  for (const char* name : kSlotNames) {
    for (const char* f : {"n", "R", "B", "mse", "time"}) report.columns.push_back(std::string(name) + " " + f);
  }
  report.columns.push_back("status");
  for (std::size_t s = 0; s < result.rows.size(); ++s) {
    const auto& row = result.rows[s];
    std::vector<Cell> cells{I(static_cast<Index>(s + 1)), std::to_string(cfg.seed), I(row.R), I(row.B)};
    for (double k : row.mse_kappa) cells.emplace_back(k);
    for (double k : row.time_kappa) cells.emplace_back(k);
    cells.emplace_back(row.c_max);
    for (std::size_t slot = 0; slot < 6; ++slot) {
      const auto& hp = row.params[slot];
      cells.emplace_back(I(hp.n));
      cells.emplace_back(I(hp.R));
      cells.emplace_back(I(hp.B));
      cells.emplace_back(row.mse[slot]);
      cells.emplace_back(row.time[slot]);
    }
    cells.emplace_back(row.status);
    report.rows.push_back(std::move(cells));
  }
  return result;
}

Report run_verb(const std::string& verb, const ExperimentConfig& cfg) {
  if (verb == "run") return run_single(cfg);
  if (verb == "calibrate") return run_calibrate(cfg);
  if (verb == "tune") return run_tune(cfg);
  if (verb == "verify-mse") return run_mse_verification(cfg);
  if (verb == "compare") return run_budget_comparison(cfg).report;
  throw ConfigError("unknown verb: " + verb);
}

}  // namespace subboot::bench
