#include "free_boundary.h"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <iostream>

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

InteriorVector lerp(const InteriorVector& a, const InteriorVector& b, double s) {
  InteriorVector out;
  out.x = a.x + s * (b.x - a.x);
  out.y = a.y + s * (b.y - a.y);
  return out;
}

InteriorScalar lerp(const InteriorScalar& a, const InteriorScalar& b, double s) {
  return a + s * (b - a);
}

// Material rate of the outward unit normal along the flow of u on the unit
// disk at the initial instant: Ndot = -(N . (Du) T) T at each circle node.
void initial_normal_rate(const InteriorVector& u, BoundaryField* ndx, BoundaryField* ndy) {
  GridPtr g = u.x.g;
  DiskSpec sx = to_spec(u.x), sy = to_spec(u.y);
  InteriorScalar ux_x = from_spec(d_x(sx)), ux_y = from_spec(d_y(sx));
  InteriorScalar uy_x = from_spec(d_x(sy)), uy_y = from_spec(d_y(sy));
  std::vector<double> vx(size_t(g->Nth)), vy(size_t(g->Nth));
  const int ib = g->Nr - 1;
  for (int j = 0; j < g->Nth; j++) {
    double nx = std::cos(g->theta[j]), ny = std::sin(g->theta[j]);
    double tx = -ny, ty = nx;
    double dut_x = ux_x.at(ib, j) * tx + ux_y.at(ib, j) * ty;
    double dut_y = uy_x.at(ib, j) * tx + uy_y.at(ib, j) * ty;
    double c = nx * dut_x + ny * dut_y;
    vx[size_t(j)] = -c * tx;
    vy[size_t(j)] = -c * ty;
  }
  *ndx = bd_transform(g, vx);
  *ndy = bd_transform(g, vy);
}

// <X, n> at the boundary row against normal samples.
BoundaryField ring_dot(const InteriorVector& X, const std::vector<double>& nxv,
                       const std::vector<double>& nyv) {
  GridPtr g = X.x.g;
  std::vector<double> out(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++)
    out[size_t(j)] = X.x.at(g->Nr - 1, j) * nxv[size_t(j)] + X.y.at(g->Nr - 1, j) * nyv[size_t(j)];
  return bd_transform(g, out);
}

// Gradient part of an id + grad f frame field: rhs/data Neumann solve, then
// A grad of the potential.
InteriorVector perturbed_gradient_part(const PulledBackLaplacian& L, const InteriorVector& Xt,
                                       const BoundaryField& nx, const BoundaryField& ny,
                                       const std::vector<double>& nxv,
                                       const std::vector<double>& nyv) {
  InteriorScalar rhs = pulled_divergence(L, Xt);
  BoundaryField gN = ring_dot(Xt, nxv, nyv);
  InteriorScalar q = solve_pulled_back_neumann(L, rhs, gN, nx, ny);
  return apply_inverse_jacobian(L, interior_gradient(q));
}

struct SnapshotBuild {
  std::shared_ptr<ZSnapshot> snap;
  std::vector<double> nxv, nyv;  // normal samples, reused by callers
};

SnapshotBuild build_snapshot(const Decomposition& dec, const FlowMap& eta,
                             const InteriorVector& ucomp, const InteriorVector& gradh,
                             const BoundaryField& ndot_x, const BoundaryField& ndot_y,
                             const FlowMap* binv_seed) {
  GridPtr g = eta.disp.x.g;
  auto s = std::make_shared<ZSnapshot>();
  s->g = g;
  s->dec = dec;
  s->binv = invert_map(dec.beta, binv_seed);
  s->bpts = map_points(dec.beta);
  s->bipts = map_points(s->binv);
  s->L = make_pulled_back_laplacian(dec.f.f);
  s->Aeta = inverse_jacobian(eta);

  BoundaryCurve curve = composed_boundary_curve(dec.f);
  BoundaryField dx = bd_derivative(curve.x, 1), dy = bd_derivative(curve.y, 1);
  std::vector<double> dxv = bd_inverse(dx), dyv = bd_inverse(dy);
  std::vector<double> nxv(size_t(g->Nth)), nyv(size_t(g->Nth));
  s->speed.assign(size_t(g->Nth), 0.0);
  for (int j = 0; j < g->Nth; j++) {
    double sp = std::hypot(dxv[size_t(j)], dyv[size_t(j)]);
    if (sp < 1e-12)
      throw SimError(ErrKind::validation, "boundary curve tangent degenerates");
    s->speed[size_t(j)] = sp;
    nxv[size_t(j)] = dyv[size_t(j)] / sp;
    nyv[size_t(j)] = -dxv[size_t(j)] / sp;
  }
  s->nx_img = bd_transform(g, nxv);
  s->ny_img = bd_transform(g, nyv);

  // Boundary angle map of beta and its inverse parameters.
  std::vector<double> alpha(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++) {
    double th = g->theta[j];
    double bx = std::cos(th) + dec.beta.disp.x.at(g->Nr - 1, j);
    double by = std::sin(th) + dec.beta.disp.y.at(g->Nr - 1, j);
    double a = std::atan2(by, bx);
    while (a < th - M_PI) a += 2.0 * M_PI;
    while (a > th + M_PI) a -= 2.0 * M_PI;
    alpha[size_t(j)] = a;
  }
  s->tstar = invert_angle_map(g, alpha);
  std::vector<double> nlx = bd_eval_at(s->nx_img, alpha);
  std::vector<double> nly = bd_eval_at(s->ny_img, alpha);
  s->nlab_x = bd_transform(g, nlx);
  s->nlab_y = bd_transform(g, nly);

  s->ucomp = ucomp;
  s->gradh = gradh;
  s->ndot_x = ndot_x;
  s->ndot_y = ndot_y;
  return SnapshotBuild{s, std::move(nxv), std::move(nyv)};
}

}  // namespace

std::shared_ptr<const ZSnapshot> make_snapshot(const Decomposition& dec, const FlowMap& eta,
                                               const InteriorVector& ucomp,
                                               const InteriorVector& gradh,
                                               const BoundaryField& ndot_x,
                                               const BoundaryField& ndot_y,
                                               const FlowMap* binv_seed) {
  return build_snapshot(dec, eta, ucomp, gradh, ndot_x, ndot_y, binv_seed).snap;
}

InteriorScalar solve_interior_pressure(const InteriorVector& util, const PulledBackLaplacian& L) {
  InteriorVector adv = pulled_convect(L, util, util);
  InteriorScalar rhs = -1.0 * pulled_divergence(L, adv);
  return solve_pulled_back_dirichlet(L, rhs, bd_zero(util.x.g));
}

InteriorScalar solve_interior_pressure(const InteriorVector& util, const VolumePotential& F) {
  PulledBackLaplacian L = make_pulled_back_laplacian(F.f);
  return solve_interior_pressure(util, L);
}

InteriorVector solve_h_neumann(const VolumePotential& F, const PulledBackLaplacian& L,
                               const BoundaryField& fdot, const InteriorVector& vtil) {
  GridPtr g = F.f.g;
  // The potential carries the full normal motion of the boundary image: the
  // rotational part is tangent there, so subtracting it only removes the
  // small normal leak the lagged iterate accumulates within a step.
  InteriorScalar fdot_ext = volume_extension_dot(F, fdot);
  InteriorVector V = interior_gradient(fdot_ext);
  V.x = V.x - vtil.x;
  V.y = V.y - vtil.y;

  BoundaryCurve curve = composed_boundary_curve(F);
  BoundaryField dx = bd_derivative(curve.x, 1), dy = bd_derivative(curve.y, 1);
  std::vector<double> dxv = bd_inverse(dx), dyv = bd_inverse(dy);
  std::vector<double> nxv(size_t(g->Nth)), nyv(size_t(g->Nth)), speed(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++) {
    double sp = std::hypot(dxv[size_t(j)], dyv[size_t(j)]);
    speed[size_t(j)] = sp;
    nxv[size_t(j)] = dyv[size_t(j)] / sp;
    nyv[size_t(j)] = -dxv[size_t(j)] / sp;
  }
  BoundaryField gN = ring_dot(V, nxv, nyv);

  // Project out the arclength-weighted mean: a uniform flux defect is the
  // volume error of the incoming data, which the conormal problem cannot
  // carry; it is measured and bounded by the run invariants instead.
  std::vector<double> gNv = bd_inverse(gN);
  double flux = 0.0, len = 0.0;
  for (int j = 0; j < g->Nth; j++) {
    flux += gNv[size_t(j)] * speed[size_t(j)];
    len += speed[size_t(j)];
  }
  for (int j = 0; j < g->Nth; j++) gNv[size_t(j)] -= flux / len;
  gN = bd_transform(g, gNv);

  BoundaryField nx = bd_transform(g, nxv), ny = bd_transform(g, nyv);
  InteriorScalar h = solve_pulled_back_neumann(L, interior_constant(g, 0.0), gN, nx, ny);
  return apply_inverse_jacobian(L, interior_gradient(h));
}

InteriorVector solve_h_neumann(const VolumePotential& F, const BoundaryField& fdot,
                               const InteriorVector& vtil) {
  PulledBackLaplacian L = make_pulled_back_laplacian(F.f);
  return solve_h_neumann(F, L, fdot, vtil);
}

InteriorVector z_rhs(const ZSnapshot& snap, const InteriorVector& z) {
  GridPtr g = snap.g;
  std::vector<double> nxv = bd_inverse(snap.nx_img), nyv = bd_inverse(snap.ny_img);

  // Q of the composed advection of z by the map velocity.
  InteriorVector W1 = interior_convect(z, apply_map_jacobian(snap.Aeta, snap.ucomp));
  InteriorVector X1 = compose_vector(W1, snap.bipts);
  InteriorVector Q1 = perturbed_gradient_part(snap.L, X1, snap.nx_img, snap.ny_img, nxv, nyv);
  InteriorVector T1 = compose_vector(Q1, snap.bpts);

  // P of the composed derivative of grad h along z.
  InteriorVector W2 = interior_convect(snap.gradh, apply_map_jacobian(snap.Aeta, z));
  InteriorVector X2 = compose_vector(W2, snap.bipts);
  InteriorVector Q2 = perturbed_gradient_part(snap.L, X2, snap.nx_img, snap.ny_img, nxv, nyv);
  InteriorVector P2;
  P2.x = X2.x - Q2.x;
  P2.y = X2.y - Q2.y;
  InteriorVector T2 = compose_vector(P2, snap.bpts);

  // Gradient correction restoring tangency: harmonic potential whose normal
  // derivative balances the normal production of the first two groups.
  std::vector<double> ndx = bd_inverse(snap.ndot_x), ndy = bd_inverse(snap.ndot_y);
  std::vector<double> nlx = bd_inverse(snap.nlab_x), nly = bd_inverse(snap.nlab_y);
  std::vector<double> data(size_t(g->Nth));
  for (int j = 0; j < g->Nth; j++) {
    double zb_x = z.x.at(g->Nr - 1, j), zb_y = z.y.at(g->Nr - 1, j);
    double wb_x = W1.x.at(g->Nr - 1, j), wb_y = W1.y.at(g->Nr - 1, j);
    data[size_t(j)] = -(zb_x * ndx[size_t(j)] + zb_y * ndy[size_t(j)] + wb_x * nlx[size_t(j)] +
                        wb_y * nly[size_t(j)]);
  }
  BoundaryField dlab = bd_transform(g, data);
  std::vector<double> dres = bd_eval_at(dlab, snap.tstar);
  // Enforce the flux-free compatibility of the potential's data along the
  // image curve (the differenced normal rate is only O(dt) accurate).
  double flux = 0.0, len = 0.0;
  for (int j = 0; j < g->Nth; j++) {
    flux += dres[size_t(j)] * snap.speed[size_t(j)];
    len += snap.speed[size_t(j)];
  }
  double c = flux / len;
  for (int j = 0; j < g->Nth; j++) dres[size_t(j)] -= c;
  BoundaryField gNt = bd_transform(g, dres);
  InteriorScalar Ht =
      solve_pulled_back_neumann(snap.L, interior_constant(g, 0.0), gNt, snap.nx_img, snap.ny_img);
  InteriorVector GH = apply_inverse_jacobian(snap.L, interior_gradient(Ht));
  InteriorVector T3 = compose_vector(GH, snap.bpts);

  InteriorVector out;
  out.x = T1.x - T2.x + T3.x;
  out.y = T1.y - T2.y + T3.y;
  return out;
}

InteriorVector step_z(const ZSnapshot& end, const InteriorVector& z, const InteriorVector& k1,
                      double dt) {
  InteriorVector zp;
  zp.x = z.x + dt * k1.x;
  zp.y = z.y + dt * k1.y;
  InteriorVector k2 = z_rhs(end, zp);
  InteriorVector out;
  out.x = z.x + 0.5 * dt * (k1.x + k2.x);
  out.y = z.y + 0.5 * dt * (k1.y + k2.y);
  return out;
}

FreeBoundaryState initial_state(const InteriorVector& u0, double kappa, double s, double delta0) {
  GridPtr g = u0.x.g;
  if (!(kappa > 0.0))
    throw SimError(ErrKind::validation,
                   "kappa must be positive: the zero-surface-tension problem is ill-posed");
  double umax = std::max({1.0, norm_linf(u0.x), norm_linf(u0.y)});
  InteriorScalar div = interior_divergence(u0);
  if (norm_linf(div) > 1e-7 * umax)
    throw SimError(ErrKind::validation,
                   fmt("initial velocity is not divergence-free (|div| = %.3e)", norm_linf(div)));

  FreeBoundaryState st;
  st.t = 0.0;
  st.kappa = kappa;
  st.eta = identity_map(g);
  st.dec.beta = identity_map(g);
  st.dec.f = volume_extension(bd_zero(g), true, s, delta0);

  Helmholtz hd = helmholtz_decompose(u0);
  st.z = hd.P;
  st.gradh = hd.Q;
  st.ucomp.x = st.z.x + st.gradh.x;
  st.ucomp.y = st.z.y + st.gradh.y;
  st.vtil = st.z;

  st.fb = bd_zero(g);
  st.fbdot = interior_restrict_boundary(neumann_potential(u0));
  st.fbdot.c[0] = cd(0.0, 0.0);

  PulledBackLaplacian L = make_pulled_back_laplacian(st.dec.f.f);
  st.q0til = solve_interior_pressure(u0, L);
  initial_normal_rate(u0, &st.ndot_x, &st.ndot_y);
  st.snap = make_snapshot(st.dec, st.eta, st.ucomp, st.gradh, st.ndot_x, st.ndot_y);
  return st;
}

namespace {

// Time discretization drifts off the volume-preserving manifold at the
// integrator's order, and the resulting uniform boundary dilation sits in the
// gauge direction the factorization cannot absorb.  Rescale the whole image so
// the mean boundary radius is exactly one; the change is of the size of the
// time-stepping error itself.
void project_mean_radius(FlowMap& m) {
  GridPtr g = m.disp.x.g;
  int nth = g->Nth, ib = g->Nr - 1;
  double mean = 0.0;
  for (int j = 0; j < nth; j++) {
    double x = std::cos(g->theta[j]) + m.disp.x.at(ib, j);
    double y = std::sin(g->theta[j]) + m.disp.y.at(ib, j);
    mean += std::hypot(x, y);
  }
  mean /= double(nth);
  double a = 1.0 / mean;
  if (std::abs(a - 1.0) < 1e-14) return;
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < nth; j++) {
      double px = g->r[i] * std::cos(g->theta[j]);
      double py = g->r[i] * std::sin(g->theta[j]);
      m.disp.x.at(i, j) = a * m.disp.x.at(i, j) + (a - 1.0) * px;
      m.disp.y.at(i, j) = a * m.disp.y.at(i, j) + (a - 1.0) * py;
    }
}

FreeBoundaryState advance_impl(const FreeBoundaryState& state, double dt, double picard_tol,
                               int picard_max, int substeps, int depth) {
  GridPtr g = state.eta.disp.x.g;
  const double kappa = state.kappa;
  const double s = state.dec.f.s, delta0 = state.dec.f.delta0;
  if (!state.snap)
    throw SimError(ErrKind::validation, "state has no frame cache; use initial_state");
  const ZSnapshot& snap0 = *state.snap;

  // Stage-1 slope of the z transport: start-frame only, shared by iterates.
  InteriorVector k1 = z_rhs(snap0, state.z);

  // Base slow context; the boundary march refreshes the extension from the
  // marching trace itself, so only v and q0 vary along the step.
  DynamicsContext base_ctx = make_context(state.fb, state.vtil, state.q0til, kappa);

  // Picard iterate variables (end-of-step quantities, lagged by one sweep).
  FlowMap eta1;
  eta1.disp.x = state.eta.disp.x + dt * state.ucomp.x;
  eta1.disp.y = state.eta.disp.y + dt * state.ucomp.y;
  project_mean_radius(eta1);
  InteriorVector z1 = state.z, gradh1 = state.gradh, ucomp1 = state.ucomp;
  InteriorVector vtil1 = state.vtil;
  InteriorScalar q0til1 = state.q0til;
  Decomposition dec1 = state.dec;
  std::shared_ptr<ZSnapshot> snap1;
  BoundaryField fb1 = state.fb, fbdot1 = state.fbdot;
  BoundaryField ndot_x = state.ndot_x, ndot_y = state.ndot_y;
  bool converged = false;
  int iters = 0;

  for (int p = 0; p < picard_max && !converged; p++) {
    iters = p + 1;
    dec1 = decompose_embedding(eta1, &dec1, s, delta0);
    PulledBackLaplacian L1 = make_pulled_back_laplacian(dec1.f.f);

    // Stiff boundary pair over [0, dt] with the slow context interpolated
    // between the accepted start and the current end iterate.
    auto ctx_path = [&](double tau) {
      double sig = std::clamp(tau / dt, 0.0, 1.0);
      DynamicsContext c = base_ctx;
      c.v = lerp(state.vtil, vtil1, sig);
      c.q0 = lerp(state.q0til, q0til1, sig);
      c.has_v = norm_linf(c.v.x) + norm_linf(c.v.y) > 0.0;
      c.has_q0 = norm_linf(c.q0) > 0.0;
      return c;
    };
    Trajectory traj = solve_f_interval(state.fb, state.fbdot, ctx_path, kappa, dt,
                                       dt / substeps, 1e300, substeps);
    fb1 = traj.h.back();
    fbdot1 = traj.hdot.back();
    fb1.c[0] = cd(0.0, 0.0);
    fbdot1.c[0] = cd(0.0, 0.0);

    // End-frame elliptic solves.
    FlowMap binv1 = invert_map(dec1.beta, snap1 ? &snap1->binv : nullptr);
    MapPoints bipts1 = map_points(binv1);
    InteriorVector U1 = compose_vector(ucomp1, bipts1);
    q0til1 = solve_interior_pressure(U1, L1);
    vtil1 = compose_vector(z1, bipts1);
    InteriorVector gradh_til = solve_h_neumann(dec1.f, L1, fbdot1, vtil1);

    // Normal rate: seed from the accepted step, then difference snapshots.
    if (snap1) {
      ndot_x = (1.0 / dt) * (snap1->nlab_x - snap0.nlab_x);
      ndot_y = (1.0 / dt) * (snap1->nlab_y - snap0.nlab_y);
    }
    // gradh enters the snapshot only after composing through its own beta
    // points; the placeholder is overwritten right below.
    SnapshotBuild sb =
        build_snapshot(dec1, eta1, ucomp1, state.gradh, ndot_x, ndot_y, &binv1);
    snap1 = sb.snap;
    snap1->gradh = compose_vector(gradh_til, snap1->bpts);
    gradh1 = snap1->gradh;

    InteriorVector z_new = step_z(*snap1, state.z, k1, dt);
    InteriorVector ucomp_new;
    ucomp_new.x = z_new.x + gradh1.x;
    ucomp_new.y = z_new.y + gradh1.y;

    FlowMap eta_new;
    eta_new.disp.x = state.eta.disp.x + 0.5 * dt * (state.ucomp.x + ucomp_new.x);
    eta_new.disp.y = state.eta.disp.y + 0.5 * dt * (state.ucomp.y + ucomp_new.y);
    project_mean_radius(eta_new);

    InteriorVector diff;
    diff.x = eta_new.disp.x - eta1.disp.x;
    diff.y = eta_new.disp.y - eta1.disp.y;
    double err = interior_sobolev_norm(diff, 1.0);

    eta1 = eta_new;
    z1 = z_new;
    ucomp1 = ucomp_new;
    if (err <= picard_tol) converged = true;
  }

  if (!converged) {
    if (depth >= 5)
      throw SimError(ErrKind::blowup,
                     fmt("Picard iteration failed to converge at t = %.6f even at dt = %.3e",
                         state.t, dt));
    FreeBoundaryState half =
        advance_impl(state, 0.5 * dt, picard_tol, picard_max, substeps, depth + 1);
    return advance_impl(half, 0.5 * dt, picard_tol, picard_max, substeps, depth + 1);
  }

  // Final coherence pass at the accepted map.
  FreeBoundaryState out;
  out.t = state.t + dt;
  out.kappa = kappa;
  out.eta = eta1;
  out.dec = decompose_embedding(eta1, &dec1, s, delta0);
  out.fb = fb1;
  out.fbdot = fbdot1;
  out.z = z1;
  out.picard_iters = iters;

  SnapshotBuild sbf = build_snapshot(out.dec, out.eta, ucomp1, gradh1, ndot_x, ndot_y,
                                     &snap1->binv);
  // Normal rate differenced against the final frame before freezing.
  sbf.snap->ndot_x = (1.0 / dt) * (sbf.snap->nlab_x - snap0.nlab_x);
  sbf.snap->ndot_y = (1.0 / dt) * (sbf.snap->nlab_y - snap0.nlab_y);
  out.ndot_x = sbf.snap->ndot_x;
  out.ndot_y = sbf.snap->ndot_y;
  MapPoints bipts = map_points(sbf.snap->binv);
  out.vtil = compose_vector(z1, bipts);
  out.q0til = solve_interior_pressure(compose_vector(ucomp1, bipts), sbf.snap->L);
  out.gradh = gradh1;
  out.ucomp = ucomp1;
  out.snap = sbf.snap;
  return out;
}

}  // namespace

FreeBoundaryState advance_timestep(const FreeBoundaryState& state, double dt, double picard_tol,
                                   int picard_max, int substeps) {
  if (!(dt > 0.0)) throw SimError(ErrKind::validation, "dt must be positive");
  if (substeps < 1) substeps = 1;
  return advance_impl(state, dt, picard_tol, picard_max, substeps, 0);
}

EnergyTriple energy(const FreeBoundaryState& state, double kappa) {
  EnergyTriple e;
  double n2 = norm_l2(state.ucomp);
  e.kin = 0.5 * n2 * n2;
  double len = curve_perimeter(composed_boundary_curve(state.dec.f));
  e.surf = kappa * (len - 2.0 * M_PI);
  e.total = e.kin + e.surf;
  return e;
}

InteriorVector pressure_gradient_composed(const FreeBoundaryState& state) {
  if (!state.snap)
    throw SimError(ErrKind::validation, "state has no frame cache; use initial_state");
  const ZSnapshot& sn = *state.snap;
  BoundaryField curv = curvature_composed(state.dec.f);
  InteriorScalar Hk = harmonic_extension_perturbed(sn.L, curv);
  InteriorScalar ptil = state.q0til + state.kappa * Hk;
  InteriorVector Gp = apply_inverse_jacobian(sn.L, interior_gradient(ptil));
  return compose_vector(Gp, sn.bpts);
}

InteriorScalar composed_vorticity(const FreeBoundaryState& state) {
  if (!state.snap)
    throw SimError(ErrKind::validation, "state has no frame cache; use initial_state");
  const MapJacobian& A = state.snap->Aeta;
  DiskSpec sx = to_spec(state.ucomp.x);
  DiskSpec sy = to_spec(state.ucomp.y);
  InteriorScalar ux_x = from_spec(d_x(sx)), ux_y = from_spec(d_y(sx));
  InteriorScalar uy_x = from_spec(d_x(sy)), uy_y = from_spec(d_y(sy));
  // curl in image variables: d(u_y)/dx - d(u_x)/dy composed with the map.
  InteriorScalar m21 = mul_dealiased(uy_x, A.a11) + mul_dealiased(uy_y, A.a21);
  InteriorScalar m12 = mul_dealiased(ux_x, A.a12) + mul_dealiased(ux_y, A.a22);
  return m21 - m12;
}

RunRecord run_free_boundary(const SimConfig& config) {
  GridPtr g = grid_for(config);
  const double kappa = config.kappa;
  RunRecord rec;
  rec.config = config;

  const CurvatureSymbol& sym = symbol_for_grid(g);
  rec.symbol = sym.ell;
  double dt0 = default_stiff_dt(kappa, sym);
  double dt = config.dt;
  int nsub = config.substeps;
  if (dt <= 0.0) {
    dt = std::min(config.substeps * dt0, 2.5e-3);
    dt = std::min(dt, config.t_end);
    nsub = std::max(1, int(std::ceil(dt / dt0 - 1e-9)));
  } else {
    nsub = std::max(1, int(std::ceil(dt / dt0 - 1e-9)));
  }
  rec.dt_used = dt;
  rec.substeps_used = nsub;

  InteriorVector u0 = initial_velocity(config, g);
  FreeBoundaryState state = initial_state(u0, kappa, config.sobolev_s, config.delta0);
  rec.K3 = std::sqrt(kappa) * sobolev_norm_boundary(state.fbdot, 4.5);
  rec.k3_warning = rec.K3 > 50.0;
  if (rec.k3_warning)
    std::cerr << "[diskflow] warning: initial data constant " << rec.K3
              << " exceeds the regime bound 50; continuing\n";

  if (!config.output_dir.empty()) write_run_dir(config.output_dir, rec, false);

  InteriorScalar vort0 = composed_vorticity(state);

  auto make_row = [&](const FreeBoundaryState& st, double chi) {
    RunRow r;
    r.t = st.t;
    EnergyTriple e = energy(st, kappa);
    r.e_kin = e.kin;
    r.e_surf = e.surf;
    r.e_total = e.total;
    r.f_norm = sobolev_norm_boundary(st.fb, st.dec.f.s + 2.0);
    r.fdot_norm = sobolev_norm_boundary(st.fbdot, st.dec.f.s + 0.5);
    r.jac_defect = norm_linf(flow_jacobian(st.eta) - interior_constant(g, 1.0));
    r.vort_drift = norm_linf(composed_vorticity(st) - vort0);
    r.chi_gap = chi;
    r.boundary_len = curve_perimeter(composed_boundary_curve(st.dec.f));
    return r;
  };
  rec.rows.push_back(make_row(state, 0.0));

  std::string status = "completed";
  try {
    int n = 0;
    while (state.t < config.t_end - 1e-12 * std::max(1.0, config.t_end)) {
      double dtn = std::min(dt, config.t_end - state.t);
      FreeBoundaryState next =
          advance_timestep(state, dtn, config.picard_tol, config.picard_max, nsub);
      n++;
      bool last = next.t >= config.t_end - 1e-12 * std::max(1.0, config.t_end);
      if (n % config.stride == 0 || last) {
        InteriorVector gp0 = pressure_gradient_composed(state);
        InteriorVector gp1 = pressure_gradient_composed(next);
        InteriorVector mid, resid;
        mid.x = 0.5 * (gp0.x + gp1.x);
        mid.y = 0.5 * (gp0.y + gp1.y);
        resid.x = (1.0 / dtn) * (next.ucomp.x - state.ucomp.x) + mid.x;
        resid.y = (1.0 / dtn) * (next.ucomp.y - state.ucomp.y) + mid.y;
        double chi = norm_l2(resid) / std::max(norm_l2(mid), 1e-12);
        next.chi_gap = chi;
        rec.rows.push_back(make_row(next, chi));
      }
      state = next;
    }
  } catch (const SimError& e) {
    if (e.kind != ErrKind::blowup) {
      rec.status = std::string("error: ") + e.what();
      if (!config.output_dir.empty()) write_run_dir(config.output_dir, rec, true);
      throw;
    }
    status = fmt("blowup: last good time %.8f: ", state.t) + e.what();
  }
  rec.status = status;
  check_record(rec);
  if (!config.output_dir.empty()) write_run_dir(config.output_dir, rec, true);
  return rec;
}

}  // namespace df
