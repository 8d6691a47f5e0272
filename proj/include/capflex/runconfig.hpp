#pragma once

#include <array>
#include <string>
#include <vector>

#include "capflex/capgeom.hpp"
#include "capflex/stage.hpp"

namespace capflex {

// Full run configuration: plain-text key=value file plus flag overrides
// (flags win).  validate() rebuilds the derived objects and runs the Nyquist
// and hierarchy guards up front, before any field work starts.
struct RunConfig {
  // grid and orchestration
  int grid_n = 2049;
  int stages = 2;  // Q
  uint64_t seed = 1;
  int pair_budget = 4096;
  double alpha = 0.3;
  std::string out_dir = ".";
  std::string snapshot_dir;  // empty: no snapshot
  int mesh_stride = 8;

  // cap geometry
  double cap_radius = 2.0;
  double eta_param = 0.92;
  double eps_param = 0.245;

  // collar bootstrap
  double collar_delta = 0.116;
  double sigma0_tilde = 0.22;
  double w_frequency_scale = 6.0;  // mu = this / delta_1
  std::array<double, 6> x0 = {};

  // stage schedule and hypothesis constants
  double a_base = 65.0;
  double b = 1.05;
  double c = 1.28;
  double sigma0 = 0.2;
  double band_scale = 5.0;     // R of the cutoff bands
  double pinch_cap = 4.0;      // Lambda
  double norm_cap = 200.0;     // C0
  double moll_scale = 1.0;     // C_tilde
  double errorsize_cap = 1.0;  // C_hat of the schedule guard
  double coeff_floor = 0.25;   // r0
  double decomp_radius = 2.5;

  CapParams cap_params() const;
  // Throws HierarchyViolated on a bad ladder.
  ParameterSchedule schedule() const;
  // Ladder + Nyquist + band-resolvability guards; throws ConfigError,
  // ParamsInfeasible, HierarchyViolated or NyquistViolated.
  void validate() const;

  // One key=value assignment; throws ConfigError on unknown keys or
  // unparsable values.
  void set(const std::string& key, const std::string& value);
  // Parses a key=value file ('#' comments, blank lines ignored).
  void load_file(const std::string& path);

  // Deterministic JSON echo of every key, fixed order.
  std::string to_json() const;
};

// Applies --key value / --key=value style flags; returns unconsumed
// positional arguments.  "--config <file>" is loaded first, in place, so
// later flags override the file.
std::vector<std::string> apply_flags(RunConfig& cfg, const std::vector<std::string>& args);

}  // namespace capflex
