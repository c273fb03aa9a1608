// Run persistence: the RunRecord time series, deterministic CSV rendering
// (17 significant digits, fixed column order), and the reproducibility
// manifest written before stepping and finalized on exit.
#pragma once

#include <string>
#include <vector>

#include "config.h"

namespace df {

struct RunRow {
  double t = 0.0;
  double e_kin = 0.0;
  double e_surf = 0.0;
  double e_total = 0.0;
  double f_norm = 0.0;      // ||f||_{s+2} boundary norm
  double fdot_norm = 0.0;   // ||fdot||_{s+1/2} boundary norm
  double jac_defect = 0.0;  // max |J(eta) - 1|
  double vort_drift = 0.0;  // max drift of the composed vorticity from t=0
  double chi_gap = 0.0;     // relative gap of the reconstructed acceleration
                            // against the composed pressure gradient
  double boundary_len = 0.0;
};

struct RunRecord {
  SimConfig config;
  std::vector<double> symbol;  // measured curvature symbol ell(k), k = 0..K
  double K3 = 0.0;             // sqrt(kappa) * ||fdot(0)||_{s+1/2}
  bool k3_warning = false;
  double dt_used = 0.0;
  int substeps_used = 1;
  std::string status = "running";  // completed | blowup: ... | error: ...
  std::vector<RunRow> rows;
};

// The fixed CSV schema, also echoed in the manifest.
extern const char* const kCsvColumns;

std::string render_timeseries_csv(const RunRecord& rec);
std::string render_manifest(const RunRecord& rec);

// Creates dir if needed and writes manifest.txt (+ timeseries.csv when
// with_rows).  The boundary-evolution drivers call this twice: once before
// stepping (status "running", no rows) and once on exit.
void write_run_dir(const std::string& dir, const RunRecord& rec, bool with_rows);

// Row validation shared by tests and report loading: strictly increasing t,
// all entries finite.  Throws SimError{validation}.
void check_record(const RunRecord& rec);

}  // namespace df
