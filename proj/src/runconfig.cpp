#include "capflex/runconfig.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

CapParams RunConfig::cap_params() const {
  CapParams p;
  p.R = cap_radius;
  p.eta_param = eta_param;
  p.eps_param = eps_param;
  return p;
}

ParameterSchedule RunConfig::schedule() const {
  ParameterSchedule consts;
  consts.sigma0 = sigma0;
  consts.R = band_scale;
  consts.Lambda = pinch_cap;
  consts.C0 = norm_cap;
  consts.C_tilde = moll_scale;
  consts.C_hat = errorsize_cap;
  consts.Q = stages;
  consts.r0 = coeff_floor;
  consts.decomp_radius = decomp_radius;
  return make_schedule(a_base, b, c, consts);
}

void RunConfig::validate() const {
  if (grid_n < 17 || grid_n % 2 == 0)
    throw ConfigError("grid must be odd and >= 17, got " + std::to_string(grid_n));
  if (stages < 0) throw ConfigError("stages must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in ]0,1[");
  if (pair_budget < 16) throw ConfigError("pair_budget must be >= 16");
  if (mesh_stride < 1) throw ConfigError("mesh_stride must be >= 1");
  if (!(collar_delta > 0.0 && collar_delta < 0.5))
    throw ConfigError("collar_delta must be in ]0,1/2[");
  if (!(sigma0_tilde > 0.0 && sigma0_tilde < 0.5))
    throw ConfigError("sigma0_tilde must be in ]0,1/2[");
  if (!(w_frequency_scale > 0.0)) throw ConfigError("w_frequency_scale must be > 0");
  check_params(cap_params());

  const ParameterSchedule sched = schedule();  // hierarchy guard
  const int n1 = grid_n - 1;
  const double lam_q = sched.lambda(stages);
  if (4.0 * lam_q > n1)
    throw NyquistViolated("stage frequency " + fmt(lam_q) + " needs grid > " +
                          fmt(4.0 * lam_q + 1.0));
  const double mu = w_frequency_scale / sched.delta(1);
  if (4.0 * mu > n1)
    throw NyquistViolated("codimension frequency " + fmt(mu) + " needs grid > " +
                          fmt(4.0 * mu + 1.0));
  // cutoff bands must be resolvable: the thinnest is delta(Q+1)
  const double spacing = 2.0 / n1;
  if (sched.delta(stages + 1) < 8.0 * spacing)
    throw NyquistViolated("cutoff band " + fmt(sched.delta(stages + 1)) +
                          " thinner than 8 cells at this grid");
  if (collar_delta < 8.0 * spacing)
    throw NyquistViolated("collar band thinner than 8 cells at this grid");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "grid") grid_n = static_cast<int>(parse_int(key, value));
  else if (key == "stages") stages = static_cast<int>(parse_int(key, value));
  else if (key == "seed") seed = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "pair_budget") pair_budget = static_cast<int>(parse_int(key, value));
  else if (key == "alpha") alpha = parse_double(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "snapshot_dir") snapshot_dir = value;
  else if (key == "mesh_stride") mesh_stride = static_cast<int>(parse_int(key, value));
  else if (key == "cap_radius") cap_radius = parse_double(key, value);
  else if (key == "eta_param") eta_param = parse_double(key, value);
  else if (key == "eps_param") eps_param = parse_double(key, value);
  else if (key == "collar_delta") collar_delta = parse_double(key, value);
  else if (key == "sigma0_tilde") sigma0_tilde = parse_double(key, value);
  else if (key == "w_frequency_scale") w_frequency_scale = parse_double(key, value);
  else if (key == "x0") {
    std::stringstream ss(value);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
      if (i >= 6) throw ConfigError("x0 takes at most 6 comma-separated values");
      x0[static_cast<size_t>(i++)] = parse_double(key, trim(part));
    }
  } else if (key == "a_base") a_base = parse_double(key, value);
  else if (key == "b") b = parse_double(key, value);
  else if (key == "c") c = parse_double(key, value);
  else if (key == "sigma0") sigma0 = parse_double(key, value);
  else if (key == "band_scale") band_scale = parse_double(key, value);
  else if (key == "pinch_cap") pinch_cap = parse_double(key, value);
  else if (key == "norm_cap") norm_cap = parse_double(key, value);
  else if (key == "moll_scale") moll_scale = parse_double(key, value);
  else if (key == "errorsize_cap") errorsize_cap = parse_double(key, value);
  else if (key == "coeff_floor") coeff_floor = parse_double(key, value);
  else if (key == "decomp_radius") decomp_radius = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

std::string RunConfig::to_json() const {
  std::string s = "{";
  auto num = [&s](const char* k, const std::string& v, bool last = false) {
    s += std::string("\"") + k + "\": " + v + (last ? "" : ", ");
  };
  auto str = [&s](const char* k, const std::string& v, bool last = false) {
    s += std::string("\"") + k + "\": \"" + v + "\"" + (last ? "" : ", ");
  };
  num("grid", std::to_string(grid_n));
  num("stages", std::to_string(stages));
  num("seed", std::to_string(seed));
  num("pair_budget", std::to_string(pair_budget));
  num("alpha", fmt(alpha));
  str("out_dir", out_dir);
  str("snapshot_dir", snapshot_dir);
  num("mesh_stride", std::to_string(mesh_stride));
  num("cap_radius", fmt(cap_radius));
  num("eta_param", fmt(eta_param));
  num("eps_param", fmt(eps_param));
  num("collar_delta", fmt(collar_delta));
  num("sigma0_tilde", fmt(sigma0_tilde));
  num("w_frequency_scale", fmt(w_frequency_scale));
  s += "\"x0\": [";
  for (int i = 0; i < 6; ++i) s += fmt(x0[static_cast<size_t>(i)]) + (i < 5 ? ", " : "], ");
  num("a_base", fmt(a_base));
  num("b", fmt(b));
  num("c", fmt(c));
  num("sigma0", fmt(sigma0));
  num("band_scale", fmt(band_scale));
  num("pinch_cap", fmt(pinch_cap));
  num("norm_cap", fmt(norm_cap));
  num("moll_scale", fmt(moll_scale));
  num("errorsize_cap", fmt(errorsize_cap));
  num("coeff_floor", fmt(coeff_floor));
  num("decomp_radius", fmt(decomp_radius), true);
  s += "}";
  return s;
}

std::vector<std::string> apply_flags(RunConfig& cfg, const std::vector<std::string>& args) {
  // the config file is loaded at its position; later flags override it
  std::vector<std::string> positional;
  auto flag_key = [](const std::string& a) -> std::string {
    std::string k = a.substr(2);
    for (auto& ch : k)
      if (ch == '-') ch = '_';
    return k;
  };
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) {
      positional.push_back(a);
      continue;
    }
    std::string key, value;
    const size_t eq = a.find('=');
    if (eq != std::string::npos) {
      key = flag_key(a.substr(0, eq));
      value = a.substr(eq + 1);
    } else {
      key = flag_key(a);
      if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
      value = args[++i];
    }
    if (key == "config") cfg.load_file(value);
    else if (key == "R") cfg.set("cap_radius", value);
    else cfg.set(key, value);
  }
  return positional;
}

}  // namespace capflex
