#include "flow_map.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace df {

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Angle samples unwrapped so that each stays within pi of its node label.
double unwrap_near(double angle, double near) {
  double d = angle - near;
  d -= 2.0 * M_PI * std::round(d / (2.0 * M_PI));
  return near + d;
}

struct PreimageResult {
  double q1 = 0, q2 = 0;
  double res = 1e300;
};

// Solve q + d(q) = (tx, ty) with q constrained to the closed disk.  The
// Jacobian is refreshed every third sweep (chord iterations in between);
// iterates that leave the disk are projected back onto the circle, so for
// targets slightly off the image of the disk the result is the constrained
// best match on the boundary and `res` carries the normal mismatch.
PreimageResult preimage_point(const MapEval& e, double tx, double ty, double q1, double q2) {
  PreimageResult best;
  double j11 = 1, j12 = 0, j21 = 0, j22 = 1;
  for (int it = 0; it < 40; it++) {
    double rr = std::hypot(q1, q2);
    if (rr > 1.0) {
      q1 /= rr;
      q2 /= rr;
      rr = 1.0;
    }
    double th = std::atan2(q2, q1);
    double f1 = q1 + eval_at(e.dx, rr, th) - tx;
    double f2 = q2 + eval_at(e.dy, rr, th) - ty;
    double res = std::max(std::abs(f1), std::abs(f2));
    if (res < best.res) {
      best = {q1, q2, res};
      if (res <= 1e-13) break;
    } else if (it > 6 && res > 4.0 * best.res) {
      break;  // stalled against the disk constraint
    }
    if (it % 3 == 0) {
      j11 = 1.0 + eval_at(e.jxx, rr, th);
      j12 = eval_at(e.jxy, rr, th);
      j21 = eval_at(e.jyx, rr, th);
      j22 = 1.0 + eval_at(e.jyy, rr, th);
    }
    double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-8) det = (det < 0 ? -1e-8 : 1e-8);
    q1 -= (j22 * f1 - j12 * f2) / det;
    q2 -= (-j21 * f1 + j11 * f2) / det;
  }
  return best;
}

struct GradEval {
  ModeCheb dx, dy, jxx, jxy, jyy;
};

// Evaluators of grad f and its Jacobian (the Hessian of f).
GradEval make_grad_eval(const InteriorScalar& f) {
  InteriorVector gr = interior_gradient(f);
  Hessian h = interior_hessian(f);
  return {make_eval(gr.x), make_eval(gr.y), make_eval(h.xx), make_eval(h.xy), make_eval(h.yy)};
}

MapEval grad_as_map_eval(const GradEval& ge, GridPtr g) {
  return {g, ge.dx, ge.dy, ge.jxx, ge.jxy, ge.jxy, ge.jyy};
}

}  // namespace

FlowMap identity_map(GridPtr g) {
  return {interior_zero_vec(g), true, true};
}

FlowMap rotation_map(GridPtr g, double angle) {
  double ca = std::cos(angle), sa = std::sin(angle);
  FlowMap m{interior_zero_vec(g), true, true};
  m.disp.x = interior_from_fn(g, [&](double x, double y) { return ca * x - sa * y - x; });
  m.disp.y = interior_from_fn(g, [&](double x, double y) { return sa * x + ca * y - y; });
  return m;
}

MapEval make_map_eval(const FlowMap& m) {
  DiskSpec sx = to_spec(m.disp.x);
  DiskSpec sy = to_spec(m.disp.y);
  return {m.disp.x.g,          make_eval(sx),       make_eval(sy),
          make_eval(d_x(sx)),  make_eval(d_y(sx)),  make_eval(d_x(sy)),
          make_eval(d_y(sy))};
}

void eval_map(const MapEval& e, double rr, double th, double* X, double* Y) {
  *X = rr * std::cos(th) + eval_at(e.dx, rr, th);
  *Y = rr * std::sin(th) + eval_at(e.dy, rr, th);
}

MapPoints map_points(const FlowMap& m) {
  GridPtr g = m.disp.x.g;
  MapPoints p;
  p.g = g;
  p.rr.resize(size_t(g->Nr) * g->Nth);
  p.th.resize(p.rr.size());
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < g->Nth; j++) {
      double x = g->r[i] * std::cos(g->theta[j]) + m.disp.x.at(i, j);
      double y = g->r[i] * std::sin(g->theta[j]) + m.disp.y.at(i, j);
      double rr = std::hypot(x, y);
      if (rr > 1.0 + 1e-6)
        throw SimError(ErrKind::validation,
                       fmt("composition point leaves the disk: |image| = %.12f", rr));
      size_t n = size_t(i) * g->Nth + j;
      p.rr[n] = std::min(rr, 1.0);
      p.th[n] = std::atan2(y, x);
    }
  return p;
}

InteriorScalar compose_scalar(const InteriorScalar& u, const MapPoints& p) {
  ModeCheb mc = make_eval(u);
  GridPtr g = u.g;
  InteriorScalar out(g);
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < g->Nth; j++) {
      size_t n = size_t(i) * g->Nth + j;
      out.at(i, j) = eval_at(mc, p.rr[n], p.th[n]);
    }
  return out;
}

InteriorVector compose_vector(const InteriorVector& u, const MapPoints& p) {
  InteriorVector out(u.x.g);
  out.x = compose_scalar(u.x, p);
  out.y = compose_scalar(u.y, p);
  return out;
}

InteriorScalar compose_scalar(const InteriorScalar& u, const FlowMap& m) {
  return compose_scalar(u, map_points(m));
}

InteriorVector compose_vector(const InteriorVector& u, const FlowMap& m) {
  return compose_vector(u, map_points(m));
}

FlowMap compose_maps(const FlowMap& outer, const FlowMap& inner) {
  MapPoints p = map_points(inner);
  FlowMap out;
  out.disp = inner.disp + compose_vector(outer.disp, p);
  out.volume_preserving = outer.volume_preserving && inner.volume_preserving;
  out.boundary_preserving = outer.boundary_preserving && inner.boundary_preserving;
  return out;
}

FlowMap invert_map(const FlowMap& m, const FlowMap* seed) {
  GridPtr g = m.disp.x.g;
  MapEval e = make_map_eval(m);
  FlowMap out{interior_zero_vec(g), m.volume_preserving, m.boundary_preserving};
  double worst = 0;
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < g->Nth; j++) {
      double tx = g->r[i] * std::cos(g->theta[j]);
      double ty = g->r[i] * std::sin(g->theta[j]);
      double q1 = tx - m.disp.x.at(i, j);
      double q2 = ty - m.disp.y.at(i, j);
      if (seed) {
        q1 = tx + seed->disp.x.at(i, j);
        q2 = ty + seed->disp.y.at(i, j);
      }
      PreimageResult r = preimage_point(e, tx, ty, q1, q2);
      worst = std::max(worst, r.res);
      out.disp.x.at(i, j) = r.q1 - tx;
      out.disp.y.at(i, j) = r.q2 - ty;
    }
  if (worst > 3e-8)
    throw SimError(ErrKind::validation,
                   fmt("map inversion did not converge (worst residual %.3e); "
                       "the map is too far from a disk diffeomorphism",
                       worst));
  return out;
}

InteriorScalar flow_jacobian(const FlowMap& m) {
  DiskSpec sx = to_spec(m.disp.x);
  DiskSpec sy = to_spec(m.disp.y);
  InteriorScalar axx = from_spec(d_x(sx)), axy = from_spec(d_y(sx));
  InteriorScalar ayx = from_spec(d_x(sy)), ayy = from_spec(d_y(sy));
  InteriorScalar one = interior_constant(m.disp.x.g, 1.0);
  return one + axx + ayy + mul_dealiased(axx, ayy) - mul_dealiased(axy, ayx);
}

FlowMap compose_decomposition(const Decomposition& d) {
  MapPoints p = map_points(d.beta);
  InteriorVector gr = interior_gradient(d.f.f);
  FlowMap out;
  out.disp = d.beta.disp + compose_vector(gr, p);
  return out;
}

double composition_defect(const Decomposition& d, const FlowMap& eta) {
  FlowMap c = compose_decomposition(d);
  InteriorVector diff = c.disp - eta.disp;
  return norm_linf(diff);
}

std::vector<double> invert_angle_map(GridPtr g, const std::vector<double>& angle_at_node) {
  std::vector<double> per(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++) per[size_t(j)] = angle_at_node[size_t(j)] - g->theta[j];
  BoundaryField P = bd_transform(g, per);
  BoundaryField Pd = bd_derivative(P, 1);
  std::vector<double> out(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++) {
    double target = g->theta[j];
    // initial guess: subtract the periodic part evaluated at the node
    double t = target - per[size_t(j)];
    double f = 0;
    bool ok = false;
    for (int it = 0; it < 50; it++) {
      std::vector<double> tv{t};
      f = t + bd_eval_at(P, tv)[0] - target;
      if (std::abs(f) <= 1e-13) {
        ok = true;
        break;
      }
      double fp = 1.0 + bd_eval_at(Pd, tv)[0];
      if (std::abs(fp) < 0.05) fp = (fp < 0 ? -0.05 : 0.05);
      double step = f / fp;
      // damp to keep the iteration inside the monotone branch
      if (std::abs(step) > 1.0) step = (step < 0 ? -1.0 : 1.0);
      t -= step;
    }
    if (!ok)
      throw SimError(ErrKind::validation,
                     fmt("angle map inversion failed at node %g (residual %.3e)",
                         double(j), f));
    out[size_t(j)] = t;
  }
  return out;
}

std::vector<double> bd_eval_at(const BoundaryField& f, const std::vector<double>& t) {
  int K = f.c.empty() ? -1 : int(f.c.size()) - 1;
  std::vector<double> out(t.size());
  for (size_t n = 0; n < t.size(); n++) {
    double s = f.c.empty() ? 0.0 : f.c[0].real();
    for (int k = 1; k <= K; k++) {
      double ck = std::cos(k * t[n]), sk = std::sin(k * t[n]);
      s += 2.0 * (f.c[size_t(k)].real() * ck - f.c[size_t(k)].imag() * sk);
    }
    out[n] = s;
  }
  return out;
}

Decomposition decompose_embedding(const FlowMap& eta, const Decomposition* seed, double s,
                                  double delta0) {
  GridPtr g = eta.disp.x.g;
  const int nth = g->Nth;

  // Target boundary curve of eta as a radial graph over the polar angle.
  BoundaryField ex = interior_restrict_boundary(eta.disp.x);
  BoundaryField ey = interior_restrict_boundary(eta.disp.y);
  std::vector<double> exs = bd_inverse(ex), eys = bd_inverse(ey);
  std::vector<double> alpha_t(static_cast<size_t>(nth)), rho_t(static_cast<size_t>(nth));
  for (int j = 0; j < nth; j++) {
    double x = std::cos(g->theta[j]) + exs[size_t(j)];
    double y = std::sin(g->theta[j]) + eys[size_t(j)];
    alpha_t[size_t(j)] = unwrap_near(std::atan2(y, x), g->theta[j]);
    rho_t[size_t(j)] = std::hypot(x, y);
  }
  std::vector<double> tstar = invert_angle_map(g, alpha_t);
  BoundaryField rho_param = bd_transform(g, rho_t);
  BoundaryField rho_graph = bd_transform(g, bd_eval_at(rho_param, tstar));

  BoundaryField h = seed ? seed->f.h : bd_zero(g);
  h.c[0] = 0.0;

  for (int sweep = 0; sweep < 50; sweep++) {
    VolumePotential F = volume_extension(h, /*use_cutoff=*/true, s, delta0);
    BoundaryCurve cur = composed_boundary_curve(F);
    std::vector<double> cxs = bd_inverse(cur.x), cys = bd_inverse(cur.y);
    std::vector<double> alpha_c(static_cast<size_t>(nth)), delta(static_cast<size_t>(nth));
    for (int j = 0; j < nth; j++)
      alpha_c[size_t(j)] = unwrap_near(std::atan2(cys[size_t(j)], cxs[size_t(j)]), g->theta[j]);
    std::vector<double> want = bd_eval_at(rho_graph, alpha_c);
    // The trace's zero mode is pure gauge: a uniform radial offset of the
    // target curve (a volume defect of eta) is not representable, so the
    // sweep drives only the mean-free residual and the mean survives as an
    // irreducible floor in the final composition defect.
    double dmean = 0;
    for (int j = 0; j < nth; j++) {
      delta[size_t(j)] = want[size_t(j)] - std::hypot(cxs[size_t(j)], cys[size_t(j)]);
      dmean += delta[size_t(j)];
    }
    dmean /= double(nth);
    double bres = 0;
    for (int j = 0; j < nth; j++) {
      delta[size_t(j)] -= dmean;
      bres = std::max(bres, std::abs(delta[size_t(j)]));
    }
    double floor = 2.0 * std::abs(dmean);
    if (bres > 5e-11) {
      BoundaryField dh = bd_transform(g, delta);
      dh.c[0] = 0.0;
      for (int k = 1; k <= g->K; k++) dh.c[size_t(k)] /= double(std::max(k, 1));
      h = h + dh;
      h.c[0] = 0.0;
      continue;
    }

    // Boundary graph matched; recover beta by preimages under id + grad f.
    GradEval ge = make_grad_eval(F.f);
    MapEval ce = grad_as_map_eval(ge, g);
    Decomposition out;
    out.f = F;
    out.beta = FlowMap{interior_zero_vec(g), true, true};
    for (int i = 0; i < g->Nr; i++)
      for (int j = 0; j < nth; j++) {
        double px = g->r[i] * std::cos(g->theta[j]);
        double py = g->r[i] * std::sin(g->theta[j]);
        double tx = px + eta.disp.x.at(i, j);
        double ty = py + eta.disp.y.at(i, j);
        double q1 = tx, q2 = ty;
        if (seed) {
          q1 = px + seed->beta.disp.x.at(i, j);
          q2 = py + seed->beta.disp.y.at(i, j);
        }
        double rq = std::hypot(q1, q2);
        if (rq > 1.0) {
          q1 /= rq;
          q2 /= rq;
        }
        PreimageResult r = preimage_point(ce, tx, ty, q1, q2);
        if (i == g->Nr - 1 && g->r[i] == 1.0) {
          // boundary ring: project exactly onto the circle
          double rr = std::hypot(r.q1, r.q2);
          r.q1 /= rr;
          r.q2 /= rr;
        }
        out.beta.disp.x.at(i, j) = r.q1 - px;
        out.beta.disp.y.at(i, j) = r.q2 - py;
      }
    double defect = composition_defect(out, eta);
    if (defect <= 1e-9 + floor) return out;
    if (sweep == 49)
      throw SimError(ErrKind::validation,
                     fmt("factorization stalled with composition defect %.3e", defect));
    // Feed the residual back into the trace and keep sweeping.
    BoundaryField dh = bd_transform(g, delta);
    dh.c[0] = 0.0;
    for (int k = 1; k <= g->K; k++) dh.c[size_t(k)] /= double(std::max(k, 1));
    h = h + dh;
    h.c[0] = 0.0;
  }
  throw SimError(ErrKind::validation,
                 "factorization did not converge in 50 sweeps; "
                 "the boundary image is outside the tube where it is unique");
}

MapJacobian inverse_jacobian(const FlowMap& m) {
  const auto& g = m.disp.x.g;
  DiskSpec sx = to_spec(m.disp.x);
  DiskSpec sy = to_spec(m.disp.y);
  InteriorScalar dxx = from_spec(d_x(sx)), dxy = from_spec(d_y(sx));
  InteriorScalar dyx = from_spec(d_x(sy)), dyy = from_spec(d_y(sy));
  MapJacobian A{InteriorScalar(g), InteriorScalar(g), InteriorScalar(g), InteriorScalar(g)};
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < g->Nth; j++) {
      double j11 = 1.0 + dxx.at(i, j), j12 = dxy.at(i, j);
      double j21 = dyx.at(i, j), j22 = 1.0 + dyy.at(i, j);
      double det = j11 * j22 - j12 * j21;
      if (det < 0.1) {
        throw SimError(ErrKind::validation,
                       fmt("map differential degenerates: det %.3e at node (%d, %d)", det, i, j));
      }
      A.a11.at(i, j) = j22 / det;
      A.a12.at(i, j) = -j12 / det;
      A.a21.at(i, j) = -j21 / det;
      A.a22.at(i, j) = j11 / det;
    }
  return A;
}

InteriorVector apply_map_jacobian(const MapJacobian& A, const InteriorVector& w) {
  InteriorVector out;
  out.x = mul_dealiased(A.a11, w.x) + mul_dealiased(A.a12, w.y);
  out.y = mul_dealiased(A.a21, w.x) + mul_dealiased(A.a22, w.y);
  return out;
}

}  // namespace df
