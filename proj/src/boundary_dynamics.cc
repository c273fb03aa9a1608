#include "boundary_dynamics.h"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>

namespace df {

namespace {

// Boundary trace of the zero-mean Neumann potential of div X: the scalar
// the transport and correction groups all funnel through.
BoundaryField pid(const InteriorVector& X) {
  return interior_restrict_boundary(neumann_potential(X));
}

InteriorVector hess_apply(const Hessian& H, const InteriorVector& w) {
  InteriorVector out;
  out.x = mul_dealiased(H.xx, w.x) + mul_dealiased(H.xy, w.y);
  out.y = mul_dealiased(H.xy, w.x) + mul_dealiased(H.yy, w.y);
  return out;
}

InteriorVector a_apply(const PulledBackLaplacian& L, const InteriorVector& w) {
  InteriorVector out;
  out.x = mul_dealiased(L.Axx, w.x) + mul_dealiased(L.Axy, w.y);
  out.y = mul_dealiased(L.Axy, w.x) + mul_dealiased(L.Ayy, w.y);
  return out;
}

// Solves L1 w = P X for w in the image of P, L1 = P (I + D2f).  The
// fixed point w <- P X - P(D2f w) contracts at rate ~|D2f|.
InteriorVector linv_p(const Hessian& H, const InteriorVector& X) {
  InteriorVector px = helmholtz_decompose(X).P;
  double scale = std::max({1.0, norm_linf(px.x), norm_linf(px.y)});
  InteriorVector w = px;
  double prev = -1.0;
  for (int it = 0; it < 80; it++) {
    InteriorVector pmw = helmholtz_decompose(hess_apply(H, w)).P;
    InteriorVector next = px - pmw;
    double d = std::max(norm_linf(next.x - w.x), norm_linf(next.y - w.y));
    w = next;
    if (d <= 1e-13 * scale) return w;
    if (prev >= 0.0 && d > 2.0 * prev && d > 1e-6 * scale) break;
    prev = d;
  }
  throw SimError(ErrKind::validation, "transport operator L1 fixed point failed to contract");
}

// (d^3 f)(v, v): the vector with components sum_ij f_(alpha i j) v_i v_j.
InteriorVector third_derivative_contract(const Hessian& H, const InteriorVector& v) {
  DiskSpec sxx = to_spec(H.xx);
  DiskSpec sxy = to_spec(H.xy);
  DiskSpec syy = to_spec(H.yy);
  InteriorScalar fxxx = from_spec(d_x(sxx));
  InteriorScalar fxxy = from_spec(d_y(sxx));
  InteriorScalar fxyy = from_spec(d_y(sxy));
  InteriorScalar fyyy = from_spec(d_y(syy));
  InteriorScalar vxx = mul_dealiased(v.x, v.x);
  InteriorScalar vxy = mul_dealiased(v.x, v.y);
  InteriorScalar vyy = mul_dealiased(v.y, v.y);
  InteriorVector out;
  out.x = mul_dealiased(vxx, fxxx) + 2.0 * mul_dealiased(vxy, fxxy) + mul_dealiased(vyy, fxyy);
  out.y = mul_dealiased(vxx, fxxy) + 2.0 * mul_dealiased(vxy, fxyy) + mul_dealiased(vyy, fyyy);
  return out;
}

InteriorVector advect(const InteriorVector& v) {
  InteriorVector gx = interior_gradient(v.x);
  InteriorVector gy = interior_gradient(v.y);
  InteriorVector out;
  out.x = mul_dealiased(v.x, gx.x) + mul_dealiased(v.y, gx.y);
  out.y = mul_dealiased(v.x, gy.x) + mul_dealiased(v.y, gy.y);
  return out;
}

}  // namespace

SqrtOperator build_sqrt_operator(double kappa, const CurvatureSymbol& sym) {
  SqrtOperator S;
  S.g = sym.g;
  S.kappa = kappa;
  S.s.assign(sym.ell.size(), 0.0);
  for (int k = 2; k <= S.g->K; k++) {
    if (!(sym.ell[size_t(k)] > 0.0)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "curvature symbol not positive at mode %d: %.3e", k,
                    sym.ell[size_t(k)]);
      throw SimError(ErrKind::validation, buf);
    }
    S.s[size_t(k)] = std::sqrt(sym.ell[size_t(k)]);
  }
  return S;
}

BoundaryField apply_sqrt(const SqrtOperator& S, const BoundaryField& h) {
  BoundaryField out = h;
  out.c[0] = cd(0.0, 0.0);
  if (S.g->K >= 1) out.c[1] = cd(0.0, 0.0);
  for (int k = 2; k <= S.g->K; k++) out.c[k] *= S.s[size_t(k)];
  return out;
}

BoundaryField apply_sqrt_inv(const SqrtOperator& S, const BoundaryField& z) {
  BoundaryField out = z;
  out.c[0] = cd(0.0, 0.0);
  if (S.g->K >= 1) out.c[1] = cd(0.0, 0.0);
  for (int k = 2; k <= S.g->K; k++) out.c[k] /= S.s[size_t(k)];
  return out;
}

const CurvatureSymbol& symbol_for_grid(GridPtr g) {
  static std::mutex mu;
  static std::map<const Grid*, std::unique_ptr<CurvatureSymbol>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(g.get());
  if (it == cache.end()) {
    auto sym = std::make_unique<CurvatureSymbol>(linearized_curvature_symbol(g));
    it = cache.emplace(g.get(), std::move(sym)).first;
  }
  return *it->second;
}

double default_stiff_dt(double kappa, const CurvatureSymbol& sym) {
  double top = sym.ell.back();
  return M_PI / (2.0 * std::sqrt(kappa * top));
}

BoundaryState make_state(const BoundaryField& h, const BoundaryField& hdot, double kappa,
                         const SqrtOperator& S) {
  BoundaryState st;
  st.kappa = kappa;
  st.z1 = apply_sqrt(S, h);
  for (int k = 2; k <= h.g->K; k++) st.z1.c[k] *= std::sqrt(kappa);
  st.z2 = hdot;
  st.z2.c[0] = cd(0.0, 0.0);
  st.low_h = h.c[1];
  return st;
}

BoundaryField state_h(const BoundaryState& st, const SqrtOperator& S) {
  BoundaryField h = apply_sqrt_inv(S, st.z1);
  double rk = 1.0 / std::sqrt(st.kappa);
  for (int k = 2; k <= h.g->K; k++) h.c[k] *= rk;
  h.c[1] = st.low_h;
  h.c[0] = cd(0.0, 0.0);
  return h;
}

DynamicsContext trivial_context(GridPtr g, double kappa) {
  DynamicsContext ctx;
  ctx.kappa = kappa;
  ctx.f = volume_extension(bd_zero(g), true);
  ctx.v = interior_zero_vec(g);
  ctx.q0 = interior_zero(g);
  ctx.has_v = false;
  ctx.has_q0 = false;
  return ctx;
}

DynamicsContext make_context(const BoundaryField& h, const InteriorVector& v,
                             const InteriorScalar& q0, double kappa) {
  DynamicsContext ctx;
  ctx.kappa = kappa;
  ctx.f = volume_extension(h, true);
  ctx.v = v;
  ctx.q0 = q0;
  ctx.has_v = norm_linf(v.x) + norm_linf(v.y) > 0.0;
  ctx.has_q0 = norm_linf(q0) > 0.0;
  return ctx;
}

void refresh_extension(DynamicsContext& ctx, const BoundaryField& h) {
  ctx.f = volume_extension(h, true);
}

std::pair<BoundaryField, BoundaryField> assemble_rhs(const BoundaryState& st,
                                                     const DynamicsContext& ctx,
                                                     const SqrtOperator& S) {
  GridPtr g = st.z1.g;
  const double kap = st.kappa;
  BoundaryField h = state_h(st, S);

  // Curvature remainder: the full composed curvature minus the constant and
  // minus the linear part handled exactly by the stepper on |k| >= 2.
  BoundaryField m = curvature_composed(ctx.f);
  m.c[0] -= cd(1.0, 0.0);
  BoundaryField lin = bd_zero(g);
  for (int k = 2; k <= g->K; k++) lin.c[k] = S.s[size_t(k)] * S.s[size_t(k)] * h.c[k];
  BoundaryField r2 = (-kap) * (m - lin);

  // Inverse-Jacobian correction of the curvature force, through the
  // perturbed harmonic extension of m.
  PulledBackLaplacian L = make_pulled_back_laplacian(ctx.f.f);
  Hessian H = interior_hessian(ctx.f.f);
  InteriorScalar Gm = harmonic_extension_perturbed(L, m);
  InteriorVector dG = interior_gradient(Gm);
  InteriorVector AdG = a_apply(L, dG);
  InteriorVector AmI_dG = AdG - dG;
  r2 = r2 - kap * pid(AmI_dG) + kap * pid(hess_apply(H, linv_p(H, AdG)));

  if (ctx.has_v) {
    // Transport of the extension velocity: 2 * (D2 fdot) v terms.
    InteriorScalar fdot = volume_extension_dot(ctx.f, st.z2);
    Hessian Hd = interior_hessian(fdot);
    InteriorVector X3 = hess_apply(Hd, ctx.v);
    r2 = r2 - 2.0 * pid(X3) + 2.0 * pid(hess_apply(H, linv_p(H, X3)));

    // Second transport derivative: (d^3 f)(v, v) terms.
    InteriorVector T = third_derivative_contract(H, ctx.v);
    r2 = r2 - pid(T) + pid(hess_apply(H, linv_p(H, T)));

    // Gradient part of the self-advection, coupled through D2f.
    InteriorVector adv = advect(ctx.v);
    InteriorVector Qa = grad_inv_div(adv);
    InteriorVector X5 = hess_apply(H, Qa);
    r2 = r2 - pid(X5) + pid(hess_apply(H, linv_p(H, X5)));

    // Forcing from the self-advection itself.
    r2 = r2 - pid(adv);
  }

  if (ctx.has_q0) {
    InteriorVector dq = interior_gradient(ctx.q0);
    InteriorVector AmI_dq = a_apply(L, dq) - dq;
    r2 = r2 - pid(AmI_dq) + pid(hess_apply(H, linv_p(H, AmI_dq)));
  }

  r2 = bd_mean_free(r2);
  return {bd_zero(g), r2};
}

BoundaryState rotate_state(const BoundaryState& st, const SqrtOperator& S, double dt) {
  BoundaryState out = st;
  double sk = std::sqrt(st.kappa);
  for (int k = 2; k <= st.z1.g->K; k++) {
    double th = sk * S.s[size_t(k)] * dt;
    double c = std::cos(th), s = std::sin(th);
    cd a = st.z1.c[k], b = st.z2.c[k];
    out.z1.c[k] = c * a + s * b;
    out.z2.c[k] = -s * a + c * b;
  }
  return out;
}

BoundaryState step_boundary_state(const BoundaryState& st, const DynamicsContext& ctx, double dt,
                                  const SqrtOperator& S) {
  GridPtr g = st.z1.g;
  const double sk = std::sqrt(st.kappa);
  auto rhs_n = assemble_rhs(st, ctx, S);
  const BoundaryField& r2a = rhs_n.second;

  // Lawson predictor: lift the stage value with the exact rotation.
  BoundaryState pred = st;
  for (int k = 2; k <= g->K; k++) {
    double th = sk * S.s[size_t(k)] * dt;
    double c = std::cos(th), s = std::sin(th);
    cd a = st.z1.c[k];
    cd b = st.z2.c[k] + dt * r2a.c[k];
    pred.z1.c[k] = c * a + s * b;
    pred.z2.c[k] = -s * a + c * b;
  }
  pred.low_h = st.low_h + dt * st.z2.c[1];
  pred.z2.c[1] = st.z2.c[1] + dt * r2a.c[1];

  DynamicsContext c2 = ctx;
  refresh_extension(c2, state_h(pred, S));
  auto rhs_p = assemble_rhs(pred, c2, S);
  const BoundaryField& r2b = rhs_p.second;

  BoundaryState out = st;
  for (int k = 2; k <= g->K; k++) {
    double th = sk * S.s[size_t(k)] * dt;
    double c = std::cos(th), s = std::sin(th);
    cd a = st.z1.c[k], b = st.z2.c[k];
    out.z1.c[k] = c * a + s * b + 0.5 * dt * s * r2a.c[k];
    out.z2.c[k] = -s * a + c * b + 0.5 * dt * (c * r2a.c[k] + r2b.c[k]);
  }
  out.low_h = st.low_h + 0.5 * dt * (st.z2.c[1] + pred.z2.c[1]);
  out.z2.c[1] = st.z2.c[1] + 0.5 * dt * (r2a.c[1] + r2b.c[1]);
  out.z2.c[0] = cd(0.0, 0.0);
  return out;
}

Trajectory solve_f_interval(const BoundaryField& f1,
                            const std::function<DynamicsContext(double)>& ctx_path, double kappa,
                            double T, double dt, double K3_max, int stride) {
  return solve_f_interval(bd_zero(f1.g), f1, ctx_path, kappa, T, dt, K3_max, stride);
}

Trajectory solve_f_interval(const BoundaryField& h0, const BoundaryField& hdot0,
                            const std::function<DynamicsContext(double)>& ctx_path, double kappa,
                            double T, double dt, double K3_max, int stride) {
  GridPtr g = h0.g;
  if (!(kappa > 0.0)) throw SimError(ErrKind::validation, "kappa must be positive");
  if (!(T > 0.0)) throw SimError(ErrKind::validation, "interval length must be positive");
  if (stride < 1) stride = 1;

  const CurvatureSymbol& sym = symbol_for_grid(g);
  SqrtOperator S = build_sqrt_operator(kappa, sym);
  if (dt <= 0.0) dt = default_stiff_dt(kappa, sym);
  int nsteps = std::max(1, int(std::llround(T / dt)));
  double dta = T / nsteps;

  Trajectory traj;
  traj.K3 = std::sqrt(kappa) * sobolev_norm_boundary(hdot0, 4.5);
  traj.k3_warning = traj.K3 > K3_max;
  if (traj.k3_warning)
    std::cerr << "[diskflow] warning: initial data constant " << traj.K3
              << " exceeds configured bound " << K3_max << "; continuing\n";

  BoundaryField hd0 = hdot0;
  hd0.c[0] = cd(0.0, 0.0);
  BoundaryState st = make_state(h0, hd0, kappa, S);

  const double delta0 = 0.05;
  auto record = [&](double t, const BoundaryField& h, const BoundaryField& z2) {
    traj.t.push_back(t);
    traj.h.push_back(h);
    traj.hdot.push_back(z2);
    traj.sup_h_norm = std::max(traj.sup_h_norm, sobolev_norm_boundary(h, 6.0));
  };
  record(0.0, h0, hd0);

  for (int n = 0; n < nsteps; n++) {
    double tn = n * dta;
    BoundaryField h = state_h(st, S);
    double amp = sobolev_norm_boundary(h, 6.0);
    if (amp >= delta0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "boundary amplitude %.6f reached the admissible limit at t = %.6f",
                    amp, tn);
      throw SimError(ErrKind::blowup, buf);
    }
    DynamicsContext ctx = ctx_path(tn + 0.5 * dta);
    ctx.kappa = kappa;
    refresh_extension(ctx, h);
    st = step_boundary_state(st, ctx, dta, S);
    if ((n + 1) % stride == 0 || n + 1 == nsteps)
      record((n + 1) * dta, state_h(st, S), st.z2);
  }
  return traj;
}

}  // namespace df
