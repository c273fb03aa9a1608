#include "config.h"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace df {

namespace {

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Violations {
  std::vector<std::string> v;
  void add(int line, const std::string& msg) {
    v.push_back(line > 0 ? fmt("line %d: ", line) + msg : msg);
  }
  void raise_if_any() const {
    if (v.empty()) return;
    std::string all = "invalid configuration:";
    for (const auto& m : v) all += "\n  " + m;
    throw SimError(ErrKind::validation, all);
  }
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_real(const std::string& v, double* out) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(x)) return false;
  *out = x;
  return true;
}

bool parse_int(const std::string& v, int* out) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') return false;
  *out = int(x);
  return true;
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  SimConfig c;
  Violations bad;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  int kappa_line = 0, s_line = 0, K_line = 0, Nr_line = 0, dt_line = 0, tend_line = 0;
  int delta_line = 0, sub_line = 0, ptol_line = 0, pmax_line = 0, stride_line = 0,
      preset_line = 0;
  while (std::getline(in, raw)) {
    line++;
    std::string s = raw;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        bad.add(line, "malformed section header '" + s + "'");
        continue;
      }
      section = s.substr(1, s.size() - 2);
      if (section != "domain" && section != "time" && section != "init" && section != "output")
        bad.add(line, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      bad.add(line, "expected key = value, got '" + s + "'");
      continue;
    }
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (val.empty()) {
      bad.add(line, "key '" + key + "' has no value");
      continue;
    }
    auto real_field = [&](double* slot, int* where) {
      if (!parse_real(val, slot)) bad.add(line, "key '" + key + "' expects a real, got '" + val + "'");
      else *where = line;
    };
    auto int_field = [&](int* slot, int* where) {
      if (!parse_int(val, slot)) bad.add(line, "key '" + key + "' expects an integer, got '" + val + "'");
      else *where = line;
    };
    if (section == "domain") {
      if (key == "kappa") real_field(&c.kappa, &kappa_line);
      else if (key == "K") int_field(&c.K, &K_line);
      else if (key == "N_r") int_field(&c.N_r, &Nr_line);
      else if (key == "sobolev_s") real_field(&c.sobolev_s, &s_line);
      else if (key == "delta0") real_field(&c.delta0, &delta_line);
      else bad.add(line, "unknown key '" + key + "' in [domain]");
    } else if (section == "time") {
      if (key == "dt") {
        if (val == "auto") c.dt = 0.0;
        else real_field(&c.dt, &dt_line);
      } else if (key == "t_end") real_field(&c.t_end, &tend_line);
      else if (key == "substeps") int_field(&c.substeps, &sub_line);
      else if (key == "picard_tol") real_field(&c.picard_tol, &ptol_line);
      else if (key == "picard_max") int_field(&c.picard_max, &pmax_line);
      else bad.add(line, "unknown key '" + key + "' in [time]");
    } else if (section == "init") {
      if (key == "preset") { c.preset = val; preset_line = line; }
      else if (key == "amplitude") real_field(&c.amplitude, &preset_line);
      else if (key == "pulse") real_field(&c.pulse, &preset_line);
      else bad.add(line, "unknown key '" + key + "' in [init]");
    } else if (section == "output") {
      if (key == "dir") c.output_dir = val;
      else if (key == "stride") int_field(&c.stride, &stride_line);
      else bad.add(line, "unknown key '" + key + "' in [output]");
    } else {
      bad.add(line, "key '" + key + "' outside any section");
    }
  }

  if (!(c.kappa > 0.0))
    bad.add(kappa_line, fmt("kappa = %g rejected: the zero-surface-tension problem is ill-posed; "
                            "kappa must be positive", c.kappa));
  if (!(c.sobolev_s > 3.5))
    bad.add(s_line, fmt("sobolev_s = %g rejected: the regularity index must exceed 7/2", c.sobolev_s));
  if (c.K < 8) bad.add(K_line, fmt("K = %d rejected: need at least 8 angular modes", c.K));
  if (c.N_r < 8) bad.add(Nr_line, fmt("N_r = %d rejected: need at least 8 radial nodes", c.N_r));
  if (!(c.t_end > 0.0)) bad.add(tend_line, fmt("t_end = %g must be positive", c.t_end));
  if (!(c.delta0 > 0.0 && c.delta0 <= 0.2))
    bad.add(delta_line, fmt("delta0 = %g outside the admissible range (0, 0.2]", c.delta0));
  if (c.substeps < 1 || c.substeps > 256)
    bad.add(sub_line, fmt("substeps = %d outside [1, 256]", c.substeps));
  if (!(c.picard_tol > 0.0)) bad.add(ptol_line, "picard_tol must be positive");
  if (c.picard_max < 1) bad.add(pmax_line, "picard_max must be at least 1");
  if (c.stride < 1) bad.add(stride_line, "stride must be at least 1");
  if (c.preset != "rest" && c.preset != "rotation" && c.preset != "stream" &&
      c.preset != "gradient-pulse")
    bad.add(preset_line, "unknown preset '" + c.preset +
                             "' (expected rest | rotation | stream | gradient-pulse)");
  bad.raise_if_any();
  return c;
}

SimConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError(ErrKind::validation, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const SimConfig& c) {
  std::ostringstream out;
  char b[64];
  auto real = [&](const char* k, double v) {
    std::snprintf(b, sizeof b, "%s = %.17g\n", k, v);
    out << b;
  };
  out << "[domain]\n";
  real("kappa", c.kappa);
  out << "K = " << c.K << "\nN_r = " << c.N_r << "\n";
  real("sobolev_s", c.sobolev_s);
  real("delta0", c.delta0);
  out << "[time]\n";
  if (c.dt <= 0.0) out << "dt = auto\n";
  else real("dt", c.dt);
  real("t_end", c.t_end);
  out << "substeps = " << c.substeps << "\n";
  real("picard_tol", c.picard_tol);
  out << "picard_max = " << c.picard_max << "\n";
  out << "[init]\npreset = " << c.preset << "\n";
  real("amplitude", c.amplitude);
  real("pulse", c.pulse);
  out << "[output]\n";
  if (!c.output_dir.empty()) out << "dir = " << c.output_dir << "\n";
  out << "stride = " << c.stride << "\n";
  return out.str();
}

GridPtr grid_for(const SimConfig& c) { return Grid::make(c.K, c.N_r); }

namespace {

// Tangent divergence-free field from the stream function
// psi = (1 - r^2)^2 (1 + (x^2 - y^2)/2): u = (-d_y psi, d_x psi).
InteriorVector stream_field(GridPtr g, double amplitude) {
  InteriorScalar psi = interior_from_fn(g, [](double x, double y) {
    double r2 = x * x + y * y;
    double w = (1.0 - r2) * (1.0 - r2);
    return w * (1.0 + 0.5 * (x * x - y * y));
  });
  InteriorVector gp = interior_gradient(psi);
  InteriorVector u;
  u.x = -amplitude * gp.y;
  u.y = amplitude * gp.x;
  return u;
}

InteriorVector rotation_field(GridPtr g, double amplitude) {
  InteriorVector u;
  u.x = interior_from_fn(g, [&](double, double y) { return -amplitude * y; });
  u.y = interior_from_fn(g, [&](double x, double) { return amplitude * x; });
  return u;
}

// Fixed degree-3 harmonic polynomial g0 = 0.3 (x^3 - 3 x y^2); grad g0 is
// divergence-free with nonzero normal trace, so it is a pure gradient part.
InteriorVector pulse_gradient(GridPtr g) {
  InteriorScalar g0 = interior_from_fn(
      g, [](double x, double y) { return 0.3 * (x * x * x - 3.0 * x * y * y); });
  return interior_gradient(g0);
}

}  // namespace

InteriorVector initial_velocity_tangent(const SimConfig& c, GridPtr g) {
  if (c.preset == "rest") {
    InteriorVector u;
    u.x = interior_constant(g, 0.0);
    u.y = interior_constant(g, 0.0);
    return u;
  }
  if (c.preset == "rotation" || c.preset == "gradient-pulse")
    return rotation_field(g, c.amplitude);
  if (c.preset == "stream") return stream_field(g, c.amplitude);
  throw SimError(ErrKind::validation, "unknown preset '" + c.preset + "'");
}

InteriorVector initial_velocity(const SimConfig& c, GridPtr g) {
  InteriorVector u = initial_velocity_tangent(c, g);
  if (c.preset == "gradient-pulse") {
    InteriorVector gp = pulse_gradient(g);
    double a = c.pulse / std::sqrt(c.kappa);
    u.x = u.x + a * gp.x;
    u.y = u.y + a * gp.y;
  }
  return u;
}

}  // namespace df
