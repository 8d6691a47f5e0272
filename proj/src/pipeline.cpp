#include "capflex/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "capflex/errors.hpp"
#include "capflex/export.hpp"
#include "capflex/snapshot.hpp"

namespace capflex {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct PhaseTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  void done(const char* phase) {
    const auto t1 = std::chrono::steady_clock::now();
    std::fprintf(stderr, "[capflex] %s: %.1fs\n", phase,
                 std::chrono::duration<double>(t1 - t0).count());
    t0 = t1;
  }
};

std::string observable_json(const BoundaryObservable& o) {
  std::string s = "{";
  s += "\"value\": " + fmt(o.value) + ", ";
  s += "\"y_len_min\": " + fmt(o.y_len_min) + ", ";
  s += "\"y_len_max\": " + fmt(o.y_len_max) + ", ";
  s += "\"nodes\": " + std::to_string(o.nodes) + "}";
  return s;
}

std::string convergence_json(const std::vector<ConvergenceRow>& rows) {
  std::string s = "[";
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i) s += ", ";
    s += "{\"q\": " + std::to_string(rows[i].q) + ", \"measured\": " + fmt(rows[i].measured) +
         ", \"predicted\": " + fmt(rows[i].predicted) + ", \"admissible\": " +
         (rows[i].admissible ? "true" : "false") + "}";
  }
  return s + "]";
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << body;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

AnalyticMap cap_chart(double R, int dim) {
  AnalyticMap m;
  m.dim = dim;
  const double lift = std::sqrt(R * R - 1.0);
  m.value = [R, dim, lift](double x1, double x2, double* out) {
    std::fill(out, out + dim, 0.0);
    const double s = std::max(R * R - x1 * x1 - x2 * x2, 1e-12);
    out[0] = x1;
    out[1] = x2;
    out[2] = std::sqrt(s) - lift;
  };
  m.jacobian = [R, dim](double x1, double x2, double* out) {
    std::fill(out, out + dim * 2, 0.0);
    const double s = std::max(R * R - x1 * x1 - x2 * x2, 1e-12);
    const double inv = 1.0 / std::sqrt(s);
    out[0 * 2 + 0] = 1.0;
    out[1 * 2 + 1] = 1.0;
    out[2 * 2 + 0] = -x1 * inv;
    out[2 * 2 + 1] = -x2 * inv;
  };
  return m;
}

RunResult run_build(const RunConfig& cfg) {
  cfg.validate();
  RunResult res;
  PhaseTimer timer;

  const GridPtr grid = make_grid(cfg.grid_n);
  const CapParams p = cfg.cap_params();
  const RadialProfile prof = build_phi(p);
  res.cap_margins = check_cap_hypotheses(p, prof, cfg.sigma0_tilde);

  // reference observable of the round chart, computed before the heavy
  // fields so the sampled chart can be dropped immediately
  {
    const JetField chart = sample(cap_chart(p.R), grid);
    res.obs_cap = boundary_observable(chart, p.R);
  }
  timer.done("cap geometry");

  const ParameterSchedule sched = cfg.schedule();
  res.lambda_final = sched.lambda(cfg.stages);

  StageState st;
  {
    JetField u = build_short_map(p, grid);
    const ScalarField h = build_h(p, grid);
    MetricField g = cap_metric(p.R, grid);
    FirstApproximation fa =
        first_approximation(u, h, g, cfg.sigma0_tilde, cfg.collar_delta, &res.boot);
    u = JetField();
    timer.done("first approximation");
    BootstrapState bs = build_w(fa, g, cfg.x0, cfg.w_frequency_scale, sched, &res.boot);
    fa = FirstApproximation();
    g = MetricField();
    timer.done("codimension map");
    st = init_stage_state(bs, sched, &res.boot);
    timer.done("stage-0 hypotheses");
  }

  std::optional<SnapshotWriter> writer;
  if (!cfg.snapshot_dir.empty()) {
    writer.emplace(cfg.snapshot_dir, sched);
    writer->write_state(st);
  }

  for (int q = 0; q < cfg.stages; ++q) {
    StageReport sr;
    StageState next = run_stage(st, &sr);
    res.stages.push_back(sr);
    char phase[32];
    std::snprintf(phase, sizeof(phase), "stage %d", q);
    timer.done(phase);
    const auto rows = convergence_table({st, next}, cfg.alpha, cfg.pair_budget, cfg.seed);
    res.convergence.insert(res.convergence.end(), rows.begin(), rows.end());
    if (writer) writer->write_state(next);
    st = std::move(next);
    timer.done("convergence row");
  }
  if (writer) writer->finish();

  res.final_map = st.v;
  res.obs_final = boundary_observable(*st.v, p.R);
  timer.done("observables");

  bool ok = res.cap_margins.shortness > 0.0 && res.cap_margins.lower > 0.0 &&
            res.cap_margins.upper > 0.0 && res.boot.sandwich_lower >= 0.0 &&
            res.boot.sandwich_upper >= 0.0 && res.boot.hyp25_lower >= 0.0 &&
            res.boot.hyp25_upper >= 0.0;
  for (const StageReport& sr : res.stages)
    ok = ok && sr.sandwich_lower >= 0.0 && sr.sandwich_upper >= 0.0;
  res.margins_ok = ok;

  std::string j = "{\"schema_version\": 1, ";
  j += "\"config\": " + cfg.to_json() + ", ";
  j += "\"cap_hypotheses\": {\"shortness\": " + fmt(res.cap_margins.shortness) +
       ", \"lower\": " + fmt(res.cap_margins.lower) +
       ", \"upper\": " + fmt(res.cap_margins.upper) + "}, ";
  j += "\"bootstrap\": " + res.boot.to_json() + ", ";
  j += "\"stages\": [";
  for (size_t i = 0; i < res.stages.size(); ++i)
    j += (i ? ", " : "") + res.stages[i].to_json();
  j += "], ";
  j += "\"convergence\": " + convergence_json(res.convergence) + ", ";
  j += "\"observables\": {\"constructed\": " + observable_json(res.obs_final) +
       ", \"cap_chart\": " + observable_json(res.obs_cap) + "}, ";
  j += "\"lambda_final\": " + fmt(res.lambda_final) + ", ";
  j += std::string("\"margins_ok\": ") + (res.margins_ok ? "true" : "false") + "}\n";
  res.report_json = j;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "'");
  write_text(cfg.out_dir + "/report.json", res.report_json);
  export_mesh(*st.v, {0, 1, 2}, cfg.out_dir + "/final.ply", cfg.mesh_stride);
  std::string csv = "q,measured,predicted,admissible\n";
  for (const ConvergenceRow& r : res.convergence)
    csv += std::to_string(r.q) + "," + fmt(r.measured) + "," + fmt(r.predicted) + "," +
           (r.admissible ? "1" : "0") + "\n";
  write_text(cfg.out_dir + "/convergence.csv", csv);
  timer.done("artifacts");

  return res;
}

}  // namespace capflex
