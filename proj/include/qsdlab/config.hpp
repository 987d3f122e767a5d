#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsdlab/domain.hpp"
#include "qsdlab/grid_oracle.hpp"
#include "qsdlab/killed_sim.hpp"
#include "qsdlab/lyapunov.hpp"
#include "qsdlab/potentials.hpp"
#include "qsdlab/processes.hpp"
#include "qsdlab/qsd_estimate.hpp"

namespace qsdlab {

struct LyapunovSection {
  LyapunovFamily family = LyapunovFamily::GLRegular;
  double delta = 0.5;
  SelectOptions select;
  std::vector<double> levels{10, 100, 1000, 10000};
  std::vector<double> separations;  // collision shells (pair potentials only)
  int samples = 1000;
  // Explicit values that replace the selected ones (field name -> value).
  std::map<std::string, double> overrides;
};

struct EstimatorSection {
  InitialDistribution init;
  std::int64_t n_traj = 1000;
  double dt = 1e-3;
  double t_max = 1.0;
  std::vector<double> times;
  Integrator integrator = Integrator::EulerMaruyama;
  FVOptions fv;
  std::vector<State> probes;
  double t_probe = 3.0;
  double fixed_point_dt = 0.0;  // extra propagation for the fixed-point check (0 = off)
};

struct ConvergeSection {
  InitialDistribution nu1, nu2;
  std::vector<double> times;
  std::int64_t n_traj = 10000;
  double dt = 1e-3;
  BinSpec bins;
};

struct ValidateSection {
  std::vector<AssumptionId> assumptions;
  SamplingPlan plan;
};

struct RunConfig {
  ProcessSpec process;
  DomainSpec domain;
  std::vector<double> witness;
  LyapunovSection lyapunov;
  EstimatorSection estimator;
  GridOracleOptions oracle;
  ConvergeSection converge;
  ValidateSection validate;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> commands;  // subcommands the scenario is meant for
  // Every key after defaults are filled, "section.key" -> value text.
  std::map<std::string, std::string> entries;
};

// Parses INI text. Every violated constraint is collected and reported in one ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Sorted sections and keys with defaults filled; parse_config(canonical_text(c)) has the same text.
std::string canonical_text(const RunConfig& c);
// Hex SHA-256 of the canonical text.
std::string config_hash(const RunConfig& c);
std::string sha256_hex(const std::string& bytes);

}  // namespace qsdlab
