#include "capflex/snapshot.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

void write_block(std::ofstream& out, const char* kind, int n, int dim,
                 const std::vector<double>& data) {
  char header[64];
  std::snprintf(header, sizeof(header), "capflex %s n=%d dim=%d\n", kind, n, dim);
  out.write(header, static_cast<std::streamsize>(std::strlen(header)));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

struct BlockHeader {
  std::string kind;
  int n = 0, dim = 0;
};

BlockHeader read_header(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("truncated header in '" + path + "'");
  BlockHeader h;
  char kind[32];
  if (std::sscanf(line.c_str(), "capflex %31s n=%d dim=%d", kind, &h.n, &h.dim) != 3)
    throw IoError("bad header in '" + path + "': " + line);
  h.kind = kind;
  return h;
}

void read_data(std::ifstream& in, const std::string& path, std::vector<double>& data) {
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != data.size() * sizeof(double))
    throw IoError("truncated data in '" + path + "'");
}

GridPtr grid_for(int n, GridPtr hint) {
  if (hint && hint->n == n) return hint;
  return make_grid(n);
}

}  // namespace

void save_field(const ScalarField& f, const std::string& path) {
  auto out = open_out(path);
  write_block(out, "scalar", f.grid->n, 1, f.v);
}

void save_field(const JetField& f, const std::string& path) {
  auto out = open_out(path);
  write_block(out, "jet", f.grid->n, f.dim, f.values);
  out.write(reinterpret_cast<const char*>(f.jac.data()),
            static_cast<std::streamsize>(f.jac.size() * sizeof(double)));
}

void save_field(const MetricField& f, const std::string& path) {
  auto out = open_out(path);
  write_block(out, "metric", f.grid->n, 3, f.a11);
  out.write(reinterpret_cast<const char*>(f.a12.data()),
            static_cast<std::streamsize>(f.a12.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(f.a22.data()),
            static_cast<std::streamsize>(f.a22.size() * sizeof(double)));
}

ScalarField load_scalar(const std::string& path, GridPtr grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const BlockHeader h = read_header(in, path);
  if (h.kind != "scalar") throw IoError("'" + path + "' is not a scalar field");
  ScalarField f(grid_for(h.n, std::move(grid)));
  read_data(in, path, f.v);
  return f;
}

JetField load_jet(const std::string& path, GridPtr grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const BlockHeader h = read_header(in, path);
  if (h.kind != "jet") throw IoError("'" + path + "' is not a jet field");
  JetField f(grid_for(h.n, std::move(grid)), h.dim);
  read_data(in, path, f.values);
  read_data(in, path, f.jac);
  f.analytic_jac = true;
  return f;
}

MetricField load_metric(const std::string& path, GridPtr grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const BlockHeader h = read_header(in, path);
  if (h.kind != "metric") throw IoError("'" + path + "' is not a metric field");
  MetricField f(grid_for(h.n, std::move(grid)));
  read_data(in, path, f.a11);
  read_data(in, path, f.a12);
  read_data(in, path, f.a22);
  return f;
}

SnapshotWriter::SnapshotWriter(std::string dir, const ParameterSchedule& sched)
    : dir_(std::move(dir)), sched_(sched) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create snapshot directory '" + dir_ + "'");
}

void SnapshotWriter::write_shared(const JetField& u_anchor, const MetricField& g_target) {
  save_field(u_anchor, dir_ + "/u_anchor.jet");
  save_field(g_target, dir_ + "/g_target.met");
  shared_ = true;
}

void SnapshotWriter::write_state(const StageState& st) {
  if (!shared_) write_shared(*st.u_anchor, *st.g_target);
  const std::string base = dir_ + "/state" + std::to_string(st.q);
  save_field(*st.v, base + ".jet");
  save_field(st.h, base + ".h");
  save_field(st.eta, base + ".eta");
  qs_.push_back(st.q);
}

void SnapshotWriter::finish() {
  auto out = open_out(dir_ + "/meta.txt");
  char buf[96];
  auto num = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.17g\n", k, v);
    out << buf;
  };
  out << "schema_version=1\n";
  num("a_base", sched_.a_base);
  num("b", sched_.b);
  num("c", sched_.c);
  num("sigma0", sched_.sigma0);
  num("band_scale", sched_.R);
  num("pinch_cap", sched_.Lambda);
  num("norm_cap", sched_.C0);
  num("moll_scale", sched_.C_tilde);
  num("errorsize_cap", sched_.C_hat);
  num("coeff_floor", sched_.r0);
  num("decomp_radius", sched_.decomp_radius);
  out << "stages=" << sched_.Q << "\n";
  out << "states=";
  for (size_t i = 0; i < qs_.size(); ++i) out << (i ? "," : "") << qs_[i];
  out << "\n";
}

std::vector<StageState> load_snapshot(const std::string& dir) {
  std::ifstream meta(dir + "/meta.txt");
  if (!meta) throw IoError("cannot open '" + dir + "/meta.txt'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const size_t eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw IoError(std::string("meta.txt missing ") + k);
    return it->second;
  };
  ParameterSchedule consts;
  consts.sigma0 = std::stod(need("sigma0"));
  consts.R = std::stod(need("band_scale"));
  consts.Lambda = std::stod(need("pinch_cap"));
  consts.C0 = std::stod(need("norm_cap"));
  consts.C_tilde = std::stod(need("moll_scale"));
  consts.C_hat = std::stod(need("errorsize_cap"));
  consts.r0 = std::stod(need("coeff_floor"));
  consts.decomp_radius = std::stod(need("decomp_radius"));
  consts.Q = std::stoi(need("stages"));
  const ParameterSchedule sched =
      make_schedule(std::stod(need("a_base")), std::stod(need("b")),
                    std::stod(need("c")), consts);

  auto u = std::make_shared<JetField>(load_jet(dir + "/u_anchor.jet"));
  auto g = std::make_shared<MetricField>(load_metric(dir + "/g_target.met", u->grid));

  std::vector<StageState> states;
  std::stringstream qs(need("states"));
  std::string part;
  while (std::getline(qs, part, ',')) {
    const int q = std::stoi(part);
    const std::string base = dir + "/state" + part;
    StageState st;
    st.q = q;
    st.sched = sched;
    st.u_anchor = u;
    st.g_target = g;
    st.v = std::make_shared<JetField>(load_jet(base + ".jet", u->grid));
    st.h = load_scalar(base + ".h", u->grid);
    st.eta = load_scalar(base + ".eta", u->grid);
    states.push_back(std::move(st));
  }
  return states;
}

}  // namespace capflex
