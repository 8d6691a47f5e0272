#pragma once

#include <memory>
#include <string>
#include <vector>

#include "capflex/bootstrap.hpp"
#include "capflex/capgeom.hpp"
#include "capflex/rigidity.hpp"
#include "capflex/runconfig.hpp"
#include "capflex/stage.hpp"

namespace capflex {

// Analytic chart of the spherical cap of radius R over the unit disk,
// lifted so the rim sits at height 0; exact jacobian.
AnalyticMap cap_chart(double R, int dim = 8);

// Everything the full build produces, plus the serialized report.
struct RunResult {
  bool margins_ok = false;
  std::string report_json;

  CapHypothesisMargins cap_margins;
  BootstrapReport boot;
  std::vector<StageReport> stages;
  std::vector<ConvergenceRow> convergence;
  BoundaryObservable obs_final;  // constructed map on the rim
  BoundaryObservable obs_cap;    // standard cap chart on the rim
  std::shared_ptr<const JetField> final_map;
  double lambda_final = 0.0;  // lambda(Q)
};

// Full pipeline: cap geometry -> bootstrap -> Q stages -> observables.
// Writes report.json, final.ply and convergence.csv into out_dir, and a
// state snapshot into snapshot_dir when set.  Timing goes to stderr only;
// the artifacts are deterministic for identical config + seed.
RunResult run_build(const RunConfig& cfg);

}  // namespace capflex
