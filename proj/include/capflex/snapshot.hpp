#pragma once

#include <string>
#include <vector>

#include "capflex/field.hpp"
#include "capflex/stage.hpp"

namespace capflex {

// Binary field snapshots: a small ASCII header line followed by raw
// little-endian doubles, deterministic byte-for-byte.  A run snapshot is a
// directory with meta.txt, u_anchor.jet, g_target.met and one
// state<q>.{jet,h,eta} triple per saved stage.

void save_field(const ScalarField& f, const std::string& path);
void save_field(const JetField& f, const std::string& path);
void save_field(const MetricField& f, const std::string& path);

ScalarField load_scalar(const std::string& path, GridPtr grid = nullptr);
JetField load_jet(const std::string& path, GridPtr grid = nullptr);
MetricField load_metric(const std::string& path, GridPtr grid = nullptr);

// Writes meta.txt (schedule constants + stage list) and the shared fields;
// appends states one at a time so the caller never has to hold them all.
class SnapshotWriter {
 public:
  SnapshotWriter(std::string dir, const ParameterSchedule& sched);
  void write_shared(const JetField& u_anchor, const MetricField& g_target);
  void write_state(const StageState& st);
  void finish();  // writes meta.txt

 private:
  std::string dir_;
  ParameterSchedule sched_;
  std::vector<int> qs_;
  bool shared_ = false;
};

// Loads every saved state, sharing one anchor and target.
std::vector<StageState> load_snapshot(const std::string& dir);

}  // namespace capflex
