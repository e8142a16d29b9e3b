#pragma once

// Experiment harness behind the command-line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subboot/subboot.hpp"

namespace subboot::bench {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Data

struct DataSpec {
  std::string generator = "normal";  // normal | exponential | two-point | linear | logistic | values | csv
  Index N = 1000;
  Index p = 1;
  std::vector<double> values;  // for "values": a single column
  // csv
  std::string path;
  std::vector<std::string> columns;
  std::string response;
  std::string indicator;
  std::string transform = "none";  // none | signed-log
  char delimiter = ',';
};

struct CsvResult {
  Dataset<double> data;
  Index rejected = 0;  // rows with a non-numeric cell
};

/// Synthetic data. Regression generators draw X ~ N(0, I_p), then
/// linear: y = X beta0 + e, e ~ N(0, 1), beta0 = 0.1;
/// logistic: y ~ Bernoulli(1 / (1 + exp(-X beta0))), beta0 = 0.5.
Dataset<double> generate_data(const DataSpec& spec, const SeedSpec& seed);

/// Reads a delimited file with a header. Selected columns become the values
/// (signed-log applied when requested); `response` and `indicator` are
/// optional.
CsvResult ingest_csv(const DataSpec& spec);

/// sign(x) log|x|, with 0 at x = 0.
double signed_log(double x);

/// Loads or generates the dataset described by `spec`.
Dataset<double> load_data(const DataSpec& spec, const SeedSpec& seed);

/// Population moments of the generated columns when the law is known.
std::optional<MomentConstants<double>> population_moments(const DataSpec& spec);

// ---------------------------------------------------------------------------
// Reports

using Cell = std::variant<std::string, std::int64_t, double>;

struct Report {
  std::string title;
  Json metadata = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

enum class Format { Csv, Markdown, Json };

Format parse_format(const std::string& name);
std::string format_number(double v);
/// Byte-stable rendering; refuses a report without rows.
std::string render_report(const Report& report, Format format);
void emit_report(const Report& report, Format format, const std::string& path);

// ---------------------------------------------------------------------------
// Timing

struct TimerSpec {
  std::string mode = "wall";  // wall | model
  double alpha1 = 2e-9, alpha2 = 1e-8, alpha_sb = 1e-8, alpha_sdb = 2e-8;
  double gamma = 1.0;
  double noise = 0.0;  // relative sd of multiplicative noise (model mode)
};

/// Wall mode returns the engine's measured loop time; model mode returns a
/// deterministic virtual time from the configured coefficients, with optional
/// seeded multiplicative noise.
class Timer {
 public:
  Timer(TimerSpec spec, SeedSpec seed) : spec_(std::move(spec)), seed_(seed) {}

  bool is_model() const { return spec_.mode == "model"; }
  double seconds(Method method, Index N, const HyperParams& hp, const VarianceEstimate<double>& run);
  const TimerSpec& spec() const { return spec_; }

 private:
  TimerSpec spec_;
  SeedSpec seed_;
  std::uint64_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration

struct GridSpec {
  std::vector<double> n_exponents;  // n = floor(N^e)
  std::vector<Index> n;
  std::vector<Index> B;
  std::vector<Index> R;
};

struct CalibrationSpec {
  int points = 12;
  Index r_max = 10;
  Index b_max = 80;
  int repeats = 3;
  std::optional<Index> n;      // BLB pilot subsample size; default floor(N^0.7)
  double pilot_units = 3e5;    // SB/SDB pilot runs use R = pilot_units / n
  int rounds = 3;
};

struct ComparisonSpec {
  int settings = 6;
  std::pair<Index, Index> r_range{15, 30};
  std::pair<Index, Index> b_range{2500, 5000};
  Index M0 = 2000;  // Monte-Carlo truth size (logistic) or TB size (csv)
  std::vector<std::string> methods{"BLB", "SDB", "SB"};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  DataSpec data;
  std::string estimator = "mean";
  std::vector<Method> methods{Method::AF, Method::TB, Method::BLB, Method::SB, Method::SDB};
  HyperParams params{1, 1, 1, Provenance::User};
  GridSpec grid;
  Index M = 100;
  std::string truth = "analytic";  // analytic | monte-carlo
  TimerSpec timer;
  CalibrationSpec calibration;
  std::optional<double> c_max;
  std::optional<HyperParams> reference;  // BLB configuration whose cost sets the budget
  ComparisonSpec comparison;
  std::optional<CostModel> cost_model;
  std::string cost_model_out;  // calibrate: where to write the CostModel
  bool paper_literal = false;
  bool verbose = false;  // progress lines on stderr
  std::string output_path;
  Format format = Format::Csv;
  Json raw = Json::object();  // echo of the parsed file
};

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
Method parse_method(const std::string& name);

Json cost_model_to_json(const CostModel& c);
CostModel cost_model_from_json(const Json& j);
CostModel load_cost_model(const std::string& path);
void save_cost_model(const CostModel& c, const std::string& path);

// ---------------------------------------------------------------------------
// Verbs

/// Single engine invocation for each configured method.
Report run_single(const ExperimentConfig& cfg);

struct CalibrationOutcome {
  CostModel model;
  BlbCalibration blb;
  LinearCalibration sb;
  LinearCalibration sdb;
};

/// Pilot-run calibration of alpha1/alpha2 (BLB) and alpha for SB and SDB.
/// `c_max` (or the cost of the BLB `reference` under the fitted alpha1,
/// alpha2) drives the progressive SB/SDB rounds; with neither, only the
/// initial fit at n0 is made. `alpha_sb`/`alpha_sdb` of the outcome are the
/// final local slopes; the fits at n0 are sb.history.front() etc.
CalibrationOutcome calibrate_all(const Dataset<double>& data, const EstimatorSpec<double>& est,
                                 const ExperimentConfig& cfg, Timer& timer, std::optional<double> c_max,
                                 std::optional<HyperParams> reference);
Report run_calibrate(const ExperimentConfig& cfg);

/// Tuner constants from the influence values of the estimator on `data`.
MseConstants estimator_constants(const EstimatorSpec<double>& est, const Dataset<double>& data,
                                 const SeedSpec& seed);
Report run_tune(const ExperimentConfig& cfg);

/// MSE-ratio table over the (n, B, R) grid, datasets shared across cells.
Report run_mse_verification(const ExperimentConfig& cfg);

struct ComparisonRow {
  Index R = 0, B = 0;
  std::string status = "ok";
  std::array<double, 5> mse_kappa{};
  std::array<double, 5> time_kappa{};
  // BLB, SDB, SB, BLB*, SDB*, SB*
  std::array<double, 6> mse{};
  std::array<double, 6> time{};
  std::array<HyperParams, 6> params{};
  double c_max = 0;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  CostModel cost;
  MseConstants constants;
  Report report;
};

/// Equal-budget comparison of original and tuned BLB, SDB and SB.
ComparisonResult run_budget_comparison(const ExperimentConfig& cfg);

Report run_verb(const std::string& verb, const ExperimentConfig& cfg);

}  // namespace subboot::bench
