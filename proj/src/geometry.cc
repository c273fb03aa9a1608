#include "geometry.h"

#include <algorithm>
#include <cstdio>

namespace df {

namespace {

double interior_rows_max(const InteriorScalar& u) {
  double m = 0;
  for (int i = 0; i < u.g->Nr - 1; i++)
    for (int j = 0; j < u.g->Nth; j++) m = std::max(m, std::abs(u.at(i, j)));
  return m;
}

InteriorScalar hess_det(const Hessian& d) {
  return mul_dealiased(d.xx, d.yy) - mul_dealiased(d.xy, d.xy);
}

// Trace of the ladder-route hessian; using the same derivative path for the
// residual and for jacobian_displacement keeps the two bit-consistent.
InteriorScalar hess_trace(const Hessian& d) { return d.xx + d.yy; }

// Linearized volume operator: lap u + c1 * cof(D2 f) : D2 u, solved with the
// flat Laplacian as preconditioner.
InteriorScalar solve_linearized_volume(const Hessian& df, double c1, const InteriorScalar& rhs,
                                       const BoundaryField& bc) {
  GridPtr g = rhs.g;
  const double scale = std::max(1.0, norm_linf(rhs));
  const double tol = 1e-12 * scale;
  InteriorScalar u = solve_poisson_dirichlet_disk(rhs, bc);
  BoundaryField zero = bd_zero(g);
  double prev = -1.0;
  double rn = 0.0;
  for (int it = 0; it < 100; it++) {
    Hessian hu = interior_hessian(u);
    InteriorScalar op = hess_trace(hu);
    if (c1 != 0.0) {
      InteriorScalar cof = mul_dealiased(df.yy, hu.xx) + mul_dealiased(df.xx, hu.yy) -
                           2.0 * mul_dealiased(df.xy, hu.xy);
      op = op + c1 * cof;
    }
    InteriorScalar res = rhs - op;
    rn = interior_rows_max(res);
    if (rn <= tol) return u;
    if (prev >= 0.0 && rn >= 0.5 * prev && rn <= 1e-10 * scale) return u;
    if (!std::isfinite(rn) || rn > 1e8 * scale) break;
    prev = rn;
    u = u + solve_poisson_dirichlet_disk(res, zero);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "linearized volume solve failed to converge (residual %.3e)",
                rn);
  throw SimError(ErrKind::validation, buf);
}

}  // namespace

double psi_cutoff(double t, double delta0) {
  const double lo = delta0 / 3.0, hi = 2.0 * delta0 / 3.0;
  if (t <= lo) return 1.0;
  if (t >= hi) return 0.0;
  double u = (t - lo) / (hi - lo);
  return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double psi_cutoff_deriv(double t, double delta0) {
  const double lo = delta0 / 3.0, hi = 2.0 * delta0 / 3.0;
  if (t <= lo || t >= hi) return 0.0;
  double u = (t - lo) / (hi - lo);
  return -30.0 * u * u * (1.0 - u) * (1.0 - u) / (hi - lo);
}

Hessian interior_hessian(const InteriorScalar& f) {
  DiskSpec s = to_spec(f);
  DiskSpec sx = d_x(s);
  DiskSpec sy = d_y(s);
  DiskSpec sxy = d_y(sx);
  DiskSpec syx = d_x(sy);
  for (size_t q = 0; q < sxy.c.size(); q++) sxy.c[q] = 0.5 * (sxy.c[q] + syx.c[q]);
  Hessian h;
  h.xx = from_spec(d_x(sx));
  h.xy = from_spec(sxy);
  h.yy = from_spec(d_y(sy));
  return h;
}

BoundaryField curvature_of_curve(const BoundaryCurve& c) {
  GridPtr g = c.x.g;
  BoundaryField xp = bd_derivative(c.x, 1), yp = bd_derivative(c.y, 1);
  BoundaryField xpp = bd_derivative(c.x, 2), ypp = bd_derivative(c.y, 2);
  PadBoundary pxp = bd_to_pad(xp), pyp = bd_to_pad(yp);
  PadBoundary pxpp = bd_to_pad(xpp), pypp = bd_to_pad(ypp);
  PadBoundary out(g);
  for (int j = 0; j < g->Npad; j++) {
    double sp2 = pxp.v[j] * pxp.v[j] + pyp.v[j] * pyp.v[j];
    double sp = std::sqrt(sp2);
    if (sp < 1e-8) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "degenerate curve: |gamma'| = %.3e at node %d", sp, j);
      throw SimError(ErrKind::validation, buf);
    }
    out.v[j] = (pxp.v[j] * pypp.v[j] - pyp.v[j] * pxpp.v[j]) / (sp2 * sp);
  }
  return bd_from_pad(out);
}

double curve_perimeter(const BoundaryCurve& c) {
  GridPtr g = c.x.g;
  PadBoundary pxp = bd_to_pad(bd_derivative(c.x, 1));
  PadBoundary pyp = bd_to_pad(bd_derivative(c.y, 1));
  double acc = 0;
  for (int j = 0; j < g->Npad; j++) acc += std::hypot(pxp.v[j], pyp.v[j]);
  return acc * 2.0 * M_PI / g->Npad;
}

BoundaryCurve composed_boundary_curve(const VolumePotential& F) {
  GridPtr g = F.f.g;
  InteriorVector grad = interior_gradient(F.f);
  const int ib = g->Nr - 1;
  std::vector<double> cx(g->Nth), cy(g->Nth);
  for (int j = 0; j < g->Nth; j++) {
    cx[j] = std::cos(g->theta[j]) + grad.x.at(ib, j);
    cy[j] = std::sin(g->theta[j]) + grad.y.at(ib, j);
  }
  BoundaryCurve c;
  c.x = bd_transform(g, cx);
  c.y = bd_transform(g, cy);
  return c;
}

BoundaryField curvature_composed(const VolumePotential& F) {
  return curvature_of_curve(composed_boundary_curve(F));
}

VolumePotential volume_extension(const BoundaryField& h, bool use_cutoff, double s,
                                 double delta0) {
  GridPtr g = h.g;
  VolumePotential out;
  out.h = h;
  out.s = s;
  out.delta0 = delta0;
  out.cutoff = use_cutoff;
  out.amplitude = sobolev_norm_boundary(h, s + 2.0);
  if (!use_cutoff && out.amplitude >= delta0) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "boundary trace outside the admissible ball: amplitude %.6f >= %.6f",
                  out.amplitude, delta0);
    throw SimError(ErrKind::validation, buf);
  }
  const double c1 = use_cutoff ? psi_cutoff(out.amplitude * out.amplitude, delta0) : 1.0;
  out.psi = c1;

  InteriorScalar f = solve_laplace_dirichlet_disk(h);
  const double tol = 1e-11 * std::max(1.0, out.amplitude);
  BoundaryField zero = bd_zero(g);
  std::vector<double> hist;
  for (int it = 0; it < 25; it++) {
    Hessian d = interior_hessian(f);
    InteriorScalar res = hess_trace(d);
    if (c1 != 0.0) res = res + c1 * hess_det(d);
    double rn = interior_rows_max(res);
    hist.push_back(rn);
    if (rn <= tol || (hist.size() >= 2 && rn >= 0.5 * hist[hist.size() - 2] && rn <= 100 * tol)) {
      out.f = f;
      return out;
    }
    InteriorScalar delta = solve_linearized_volume(d, c1, -1.0 * res, zero);
    double step = (it == 0 && out.amplitude >= 0.9 * delta0) ? 0.5 : 1.0;
    f = f + step * delta;
  }
  std::string msg = "volume extension: Newton failed to converge; residuals:";
  for (double r : hist) {
    char buf[24];
    std::snprintf(buf, sizeof buf, " %.3e", r);
    msg += buf;
  }
  throw SimError(ErrKind::validation, msg);
}

InteriorScalar volume_extension_dot(const VolumePotential& F, const BoundaryField& hdot) {
  const double c1 = F.cutoff ? F.psi : 1.0;
  Hessian d = interior_hessian(F.f);
  InteriorScalar rhs(F.f.g);
  if (F.cutoff) {
    // chain-rule term from the cutoff argument: d/dt psi(|h|^2) det D2 f
    double inner = 0.0;
    const double sw = F.s + 2.0;
    for (int k = 0; k <= F.f.g->K; k++) {
      double w = std::pow(1.0 + double(k) * double(k), sw);
      double mult = (k == 0) ? 1.0 : 2.0;
      inner += mult * w * (F.h.c[k].real() * hdot.c[k].real() +
                           F.h.c[k].imag() * hdot.c[k].imag());
    }
    double rate = psi_cutoff_deriv(F.amplitude * F.amplitude, F.delta0) * 2.0 * inner;
    if (rate != 0.0) rhs = -rate * hess_det(d);
  }
  return solve_linearized_volume(d, c1, rhs, hdot);
}

CurvatureSymbol linearized_curvature_symbol(GridPtr g, double s, double delta0) {
  CurvatureSymbol S;
  S.g = g;
  S.ell.assign(size_t(g->K) + 1, 0.0);
  for (int k = 0; k <= g->K; k++) {
    // The cubic-in-eps contamination of the central difference grows like
    // (k^2 eps)^2, so high modes need proportionally smaller probes.  The
    // curvature noise floor (~1e-12) leaves orders of magnitude of headroom.
    const double e1 = std::min(1e-5, 1.5e-3 / double(k * k + 1));
    const double e2 = 2.0 * e1;
    auto probe = [&](double eps) {
      BoundaryField h = bd_zero(g);
      if (k == 0)
        h.c[0] = cd(eps, 0.0);
      else
        h.c[k] = cd(0.5 * eps, 0.0);
      VolumePotential plus = volume_extension(h, true, s, delta0);
      BoundaryField hm = bd_zero(g);
      if (k == 0)
        hm.c[0] = cd(-eps, 0.0);
      else
        hm.c[k] = cd(-0.5 * eps, 0.0);
      VolumePotential minus = volume_extension(hm, true, s, delta0);
      BoundaryField kp = curvature_composed(plus);
      BoundaryField km = curvature_composed(minus);
      double pk = (k == 0) ? eps : 0.5 * eps;
      return (kp.c[k].real() - km.c[k].real()) / (2.0 * pk);
    };
    double d1 = probe(e1);
    double d2 = probe(e2);
    double rich = (4.0 * d1 - d2) / 3.0;
    double denom = std::max({1.0, std::abs(d1), std::abs(d2)});
    if (std::abs(d1 - d2) / denom > 1e-4) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "curvature symbol probe inconsistent at mode %d: %.6e vs %.6e", k, d1, d2);
      throw SimError(ErrKind::validation, buf);
    }
    S.ell[size_t(k)] = rich;
  }
  return S;
}

BoundaryField apply_symbol(const CurvatureSymbol& S, const BoundaryField& h) {
  BoundaryField out = h;
  for (int k = 0; k <= h.g->K; k++) out.c[k] *= S.at(k);
  return out;
}

InteriorScalar map_jacobian(const InteriorVector& m) {
  DiskSpec sx = to_spec(m.x);
  DiskSpec sy = to_spec(m.y);
  InteriorScalar axx = from_spec(d_x(sx)), axy = from_spec(d_y(sx));
  InteriorScalar ayx = from_spec(d_x(sy)), ayy = from_spec(d_y(sy));
  return mul_dealiased(axx, ayy) - mul_dealiased(axy, ayx);
}

InteriorScalar jacobian_displacement(const InteriorScalar& f) {
  Hessian d = interior_hessian(f);
  InteriorScalar one = interior_constant(f.g, 1.0);
  return one + hess_trace(d) + hess_det(d);
}

InteriorVector hessian_apply(const Hessian& H, const InteriorVector& w) {
  InteriorVector out;
  out.x = mul_dealiased(H.xx, w.x) + mul_dealiased(H.xy, w.y);
  out.y = mul_dealiased(H.xy, w.x) + mul_dealiased(H.yy, w.y);
  return out;
}

}  // namespace df
