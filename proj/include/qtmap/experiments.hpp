// Experiment drivers shared by the CLI and the test suite: run configuration,
// a small TOML-style config reader, and the selfcheck / timeseries / sweep /
// fluctuation entry points. Each driver writes to a caller-supplied stream and
// returns the process exit code (0 ok, 1 verification failure, config errors
// are reported by throwing ConfigError).
#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "qtmap/models.hpp"

namespace qtmap {

struct SweepSpec {
  std::string variable = "g";  // one of: g, omega_b, tau_prime
  double start = 0.0;
  double stop = 1.0;
  int points = 5;
};

struct RunConfig {
  std::string model = "spin";  // spin | oscillator
  SpinModelParams spin;
  OscillatorModelParams oscillator;
  double beta = 1.0;
  double tau_prime = 2.0;
  int n_steps = 4096;
  std::optional<SweepSpec> sweep;
  std::string out_path;  // empty: write to the provided stream only
  unsigned long seed = 20240815;
  int jobs = 1;
  std::optional<double> strict_tol;  // overrides every selfcheck tolerance

  RunConfig() {
    // CLI defaults favor a small fully coupled spin instance that runs in
    // well under a second; library-level struct defaults stay physics-sized.
    spin.n_bath = 2;
    spin.g = 0.3;
  }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads `key = value` lines with optional [spin] / [oscillator] / [sweep]
// sections, '#' comments, and double-quoted strings. Unknown keys, malformed
// lines, and unreadable files raise ConfigError.
void load_config_file(RunConfig& cfg, const std::string& path);

// Applies a single dotted key ("spin.g", "beta", ...) to the config. Used by
// the file reader and exposed for tests.
void apply_config_pair(RunConfig& cfg, const std::string& key,
                       const std::string& value);

ProtocolModel make_model(const RunConfig& cfg);

// Prints one `CHECK <name> <residual> <tol> PASS|FAIL` line per internal
// consistency check; returns 0 iff all pass.
int run_selfcheck(const RunConfig& cfg, std::ostream& os);

// CSV with one row per time node (n_steps + 1 rows) and the thirteen
// thermodynamic columns produced by run_protocol.
int run_timeseries(const RunConfig& cfg, std::ostream& os);

// CSV with one row per sweep point; omega_b sweeps append a central
// difference derivative of delta_max_Q. Honors cfg.jobs with a
// deterministic, order-preserving worker pool.
int run_sweep(const RunConfig& cfg, std::ostream& os);

// CSV over the union of forward and reflected reverse work support plus a
// summary header; returns 1 when the fluctuation identities fail.
int run_fluctuation(const RunConfig& cfg, std::ostream& os);

}  // namespace qtmap
