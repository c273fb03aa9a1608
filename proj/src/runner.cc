#include "runner.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace df {

const char* const kCsvColumns =
    "t,E_kin,E_surf,E_total,f_norm,fdot_norm,jac_defect,vort_drift,chi_gap,boundary_len";

namespace {

std::string g17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

}  // namespace

std::string render_timeseries_csv(const RunRecord& rec) {
  std::ostringstream out;
  out << kCsvColumns << "\n";
  for (const auto& r : rec.rows) {
    out << g17(r.t) << ',' << g17(r.e_kin) << ',' << g17(r.e_surf) << ',' << g17(r.e_total)
        << ',' << g17(r.f_norm) << ',' << g17(r.fdot_norm) << ',' << g17(r.jac_defect) << ','
        << g17(r.vort_drift) << ',' << g17(r.chi_gap) << ',' << g17(r.boundary_len) << "\n";
  }
  return out.str();
}

std::string render_manifest(const RunRecord& rec) {
  std::ostringstream out;
  out << "# diskflow run manifest\n";
  out << "version = " << kVersion << "\n";
  out << "status = " << rec.status << "\n";
  out << "\n[config]\n" << config_echo(rec.config);
  out << "\n[derived]\n";
  out << "K3 = " << g17(rec.K3) << "\n";
  out << "K3_warning = " << (rec.k3_warning ? 1 : 0) << "\n";
  out << "dt_used = " << g17(rec.dt_used) << "\n";
  out << "substeps_used = " << rec.substeps_used << "\n";
  out << "rows = " << rec.rows.size() << "\n";
  out << "\n[csv]\ncolumns = " << kCsvColumns << "\nformat = %.17g\n";
  out << "\n[symbol]\n";
  for (size_t k = 0; k < rec.symbol.size(); k++)
    out << "ell_" << k << " = " << g17(rec.symbol[k]) << "\n";
  return out.str();
}

void write_run_dir(const std::string& dir, const RunRecord& rec, bool with_rows) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw SimError(ErrKind::validation, "cannot create output directory '" + dir + "': " +
                                            ec.message());
  {
    std::ofstream mf(fs::path(dir) / "manifest.txt", std::ios::binary | std::ios::trunc);
    if (!mf) throw SimError(ErrKind::validation, "cannot write manifest in '" + dir + "'");
    mf << render_manifest(rec);
  }
  if (with_rows) {
    std::ofstream cf(fs::path(dir) / "timeseries.csv", std::ios::binary | std::ios::trunc);
    if (!cf) throw SimError(ErrKind::validation, "cannot write timeseries in '" + dir + "'");
    cf << render_timeseries_csv(rec);
  }
}

void check_record(const RunRecord& rec) {
  double prev = -1e300;
  for (size_t i = 0; i < rec.rows.size(); i++) {
    const auto& r = rec.rows[i];
    if (!(r.t > prev))
      throw SimError(ErrKind::validation, "run record times are not strictly increasing");
    prev = r.t;
    const double vals[] = {r.t,          r.e_kin,      r.e_surf,  r.e_total,
                           r.f_norm,     r.fdot_norm,  r.jac_defect, r.vort_drift,
                           r.chi_gap,    r.boundary_len};
    for (double v : vals)
      if (!std::isfinite(v))
        throw SimError(ErrKind::validation, "run record contains a non-finite entry");
  }
}

}  // namespace df
