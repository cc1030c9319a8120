// Command-line front end: selfcheck | timeseries | sweep | fluctuation.
// Exit status: 0 all checks passed, 1 verification failure, 2 config error.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtmap/experiments.hpp"

namespace {

struct FlagOverrides {
  std::optional<std::string> model, out, boundary, sweep_variable;
  std::optional<double> g, beta, omega_b, h, lambda_x0, lambda_z0, alpha_x,
      alpha_z, tau_prime, strict, sweep_start, sweep_stop;
  std::optional<int> n_bath, steps, jobs, n_max, sweep_points;
  std::optional<long> seed;
};

void add_common_flags(CLI::App* sub, std::string& config_path,
                      FlagOverrides& f) {
  // --h (bath coupling) needs the short -h slot free.
  sub->set_help_flag("--help", "print help");
  sub->add_option("--config", config_path, "TOML-style config file");
  sub->add_option("--model", f.model, "spin | oscillator");
  sub->add_option("--out", f.out, "output path (default: stdout)");
  sub->add_option("--steps", f.steps, "time steps for the protocol");
  sub->add_option("--jobs", f.jobs, "concurrent sweep workers");
  sub->add_option("--seed", f.seed, "seed for randomized property checks");
  sub->add_option("--g", f.g, "system-bath coupling strength");
  sub->add_option("--beta", f.beta, "inverse temperature");
  sub->add_option("--omega-b", f.omega_b, "bath frequency / field");
  sub->add_option("--h", f.h, "bath spin-spin coupling");
  sub->add_option("--lambda-x0", f.lambda_x0, "initial transverse drive");
  sub->add_option("--lambda-z0", f.lambda_z0, "initial longitudinal drive");
  sub->add_option("--alpha-x", f.alpha_x, "transverse ramp rate");
  sub->add_option("--alpha-z", f.alpha_z, "longitudinal ramp rate");
  sub->add_option("--n-bath", f.n_bath, "number of bath spins");
  sub->add_option("--tau-prime", f.tau_prime, "protocol duration");
  sub->add_option("--boundary", f.boundary, "open | periodic");
  sub->add_option("--n-max", f.n_max, "oscillator Fock cutoff (both factors)");
  sub->add_option("--strict", f.strict, "override every selfcheck tolerance");
  sub->add_option("--sweep-variable", f.sweep_variable,
                  "g | omega_b | tau_prime");
  sub->add_option("--sweep-start", f.sweep_start, "first sweep value");
  sub->add_option("--sweep-stop", f.sweep_stop, "last sweep value");
  sub->add_option("--sweep-points", f.sweep_points, "number of sweep points");
}

void apply_flags(qtmap::RunConfig& cfg, const FlagOverrides& f) {
  using qtmap::apply_config_pair;
  if (f.model) cfg.model = *f.model;
  if (f.out) cfg.out_path = *f.out;
  if (f.steps) cfg.n_steps = *f.steps;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.seed) cfg.seed = static_cast<unsigned long>(*f.seed);
  if (f.beta) cfg.beta = *f.beta;
  if (f.tau_prime) cfg.tau_prime = *f.tau_prime;
  if (f.strict) cfg.strict_tol = *f.strict;
  if (f.g) {
    cfg.spin.g = *f.g;
    cfg.oscillator.g = *f.g;
  }
  if (f.omega_b) {
    cfg.spin.omega_b = *f.omega_b;
    cfg.oscillator.omega_bath = *f.omega_b;
  }
  if (f.h) cfg.spin.h = *f.h;
  if (f.lambda_x0) cfg.spin.lambda_x0 = *f.lambda_x0;
  if (f.lambda_z0) cfg.spin.lambda_z0 = *f.lambda_z0;
  if (f.alpha_x) cfg.spin.alpha_x = *f.alpha_x;
  if (f.alpha_z) cfg.spin.alpha_z = *f.alpha_z;
  if (f.n_bath) cfg.spin.n_bath = *f.n_bath;
  if (f.boundary) apply_config_pair(cfg, "spin.boundary", *f.boundary);
  if (f.n_max) {
    cfg.oscillator.n_max_sys = *f.n_max;
    cfg.oscillator.n_max_bath = *f.n_max;
  }
  if (f.sweep_variable)
    apply_config_pair(cfg, "sweep.variable", *f.sweep_variable);
  if (f.sweep_start)
    apply_config_pair(cfg, "sweep.start", std::to_string(*f.sweep_start));
  if (f.sweep_stop)
    apply_config_pair(cfg, "sweep.stop", std::to_string(*f.sweep_stop));
  if (f.sweep_points)
    apply_config_pair(cfg, "sweep.points", std::to_string(*f.sweep_points));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for driven open quantum systems at "
               "arbitrary system-bath coupling"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  std::string config_path;
  FlagOverrides flags;
  CLI::App* sub_selfcheck =
      app.add_subcommand("selfcheck", "run internal consistency checks");
  CLI::App* sub_timeseries =
      app.add_subcommand("timeseries", "thermodynamic quantities vs time");
  CLI::App* sub_sweep =
      app.add_subcommand("sweep", "strong-weak deviation measures vs a "
                                  "swept parameter");
  CLI::App* sub_fluctuation = app.add_subcommand(
      "fluctuation", "work distribution and fluctuation-theorem report");
  for (CLI::App* sub :
       {sub_selfcheck, sub_timeseries, sub_sweep, sub_fluctuation})
    add_common_flags(sub, config_path, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    qtmap::RunConfig cfg;
    if (!config_path.empty()) qtmap::load_config_file(cfg, config_path);
    apply_flags(cfg, flags);

    std::ofstream file;
    if (!cfg.out_path.empty()) {
      file.open(cfg.out_path);
      if (!file)
        throw std::runtime_error("cannot open output path: " + cfg.out_path);
    }
    std::ostream& os = cfg.out_path.empty() ? std::cout : file;

    if (app.got_subcommand(sub_selfcheck)) return qtmap::run_selfcheck(cfg, os);
    if (app.got_subcommand(sub_timeseries))
      return qtmap::run_timeseries(cfg, os);
    if (app.got_subcommand(sub_sweep)) return qtmap::run_sweep(cfg, os);
    return qtmap::run_fluctuation(cfg, os);
  } catch (const qtmap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
