// subboot: command-line front end for the experiment harness.
//
//   subboot <verb> --config FILE [--seed S] [--out PATH] [--format csv|markdown|json]
//                  [--workers W] [--paper-literal] [--cost-model FILE] [--verbose]
//
// Verbs: run, calibrate, tune, verify-mse, compare.

#include <iostream>

#include <CLI11.hpp>

#include "subboot/bench/bench.hpp"

using namespace subboot::bench;

int main(int argc, char** argv) {
  CLI::App app{"Bootstrap variance engines, MSE model and budget tuner"};
  app.require_subcommand(1, 1);

  std::string config_path, out_path, format_name, cost_model_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool paper_literal = false, verbose = false;

  for (const char* verb : {"run", "calibrate", "tune", "verify-mse", "compare"}) {
    auto* sub = app.add_subcommand(verb);
    sub->add_option("-c,--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the root seed");
    sub->add_option("-o,--out", out_path, "report path (stdout when omitted)");
    sub->add_option("--format", format_name, "csv, markdown or json")->check(CLI::IsMember({"csv", "markdown", "md", "json"}));
    sub->add_option("-j,--workers", workers, "worker threads (0 = all cores)");
    sub->add_flag("--paper-literal", paper_literal, "floor-rounded closed forms instead of the rounding-aware tuner");
    sub->add_option("--cost-model", cost_model_path, "calibrated cost model: input for tune/compare, output for calibrate");
    sub->add_flag("-v,--verbose", verbose, "progress on stderr");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (paper_literal) cfg.paper_literal = true;
    if (verbose) cfg.verbose = true;
    if (!format_name.empty()) cfg.format = parse_format(format_name);
    if (!out_path.empty()) cfg.output_path = out_path;
    if (!cost_model_path.empty()) {
      if (verb == "calibrate") {
        cfg.cost_model_out = cost_model_path;
      } else {
        cfg.cost_model = load_cost_model(cost_model_path);
      }
    }
    const Report report = run_verb(verb, cfg);
    if (cfg.output_path.empty()) {
      std::cout << render_report(report, cfg.format);
    } else {
      emit_report(report, cfg.format, cfg.output_path);
    }
  } catch (const subboot::Error& e) {
    std::cerr << "subboot " << verb << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "subboot " << verb << ": unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
