// Stiff evolution of the boundary potential trace h = f|_circle: the
// square-root operator of the measured curvature symbol, assembly of the
// slow right-hand side from elliptic/geometry primitives, an
// integrating-factor (Lawson) stepper whose linear part is an exact
// per-mode rotation, and the trajectory driver for an interval.
#pragma once

#include <functional>

#include "elliptic.h"
#include "geometry.h"

namespace df {

// Diagonal operator with per-mode factor sqrt(ell(k)) for |k| >= 2; zero
// (never applied) on |k| <= 1.  kappa is carried along so steppers can
// form the stiff angle sqrt(kappa * ell(k)) without extra plumbing.
struct SqrtOperator {
  GridPtr g;
  double kappa = 0.0;
  std::vector<double> s;  // sqrt(ell(k)), k = 0..K; zero for k <= 1
  double at(int k) const {
    int a = k < 0 ? -k : k;
    return s[size_t(a)];
  }
};

// Validates ell(k) > 0 on 2 <= k <= K and takes the square roots.
SqrtOperator build_sqrt_operator(double kappa, const CurvatureSymbol& sym);

// c_k -> s_k c_k on |k| >= 2; low modes are zeroed (the operator does not
// act there).  apply_sqrt_inv divides instead.
BoundaryField apply_sqrt(const SqrtOperator& S, const BoundaryField& h);
BoundaryField apply_sqrt_inv(const SqrtOperator& S, const BoundaryField& z);

// Per-grid symbol table, built once on first use and cached (thread-safe).
const CurvatureSymbol& symbol_for_grid(GridPtr g);

// Default stiff step: a quarter period of the highest retained mode.
double default_stiff_dt(double kappa, const CurvatureSymbol& sym);

// First-order state z = (sqrt(kappa) S h, hdot).  Modes |k| >= 2 of h live
// in z1 through S; the k = 1 coefficient of h is carried separately (k = 0
// is pinned to zero).  z2 holds hdot on all modes, mean-free.
struct BoundaryState {
  BoundaryField z1;
  BoundaryField z2;
  cd low_h = cd(0.0, 0.0);
  double kappa = 0.0;
};

BoundaryState make_state(const BoundaryField& h, const BoundaryField& hdot, double kappa,
                         const SqrtOperator& S);
// Reconstructs h = kappa^{-1/2} S^{-1} z1 + low-mode part.
BoundaryField state_h(const BoundaryState& st, const SqrtOperator& S);

// Slow data entering the right-hand side.  f must be the volume extension
// of the state's own boundary trace (steppers refresh it per stage); v is
// a divergence-free tangent transport field and q0 the pulled-back
// interior pressure.  has_v / has_q0 short-circuit the groups that vanish
// identically for trivial data.
struct DynamicsContext {
  VolumePotential f;
  InteriorVector v;
  InteriorScalar q0;
  double kappa = 0.0;
  bool has_v = false;
  bool has_q0 = false;
};

DynamicsContext trivial_context(GridPtr g, double kappa);
DynamicsContext make_context(const BoundaryField& h, const InteriorVector& v,
                             const InteriorScalar& q0, double kappa);
// Replaces ctx.f by the volume extension of h (cutoff form, so total).
void refresh_extension(DynamicsContext& ctx, const BoundaryField& h);

// All slow terms of the z-system: the stiff skew block is NOT included
// (the stepper applies it exactly).  r1 is identically zero; r2 collects
// the curvature remainder, the inverse-Jacobian correction terms, the
// transport and pressure groups, and the forcing, each built by composing
// elliptic/geometry solves on the current extension and restricted to the
// circle, mean-free.
std::pair<BoundaryField, BoundaryField> assemble_rhs(const BoundaryState& st,
                                                     const DynamicsContext& ctx,
                                                     const SqrtOperator& S);

// The stiff-block flow alone: per-mode rotation of (z1, z2) by the angle
// sqrt(kappa * ell(k)) * dt on |k| >= 2; low modes drift by h += dt*hdot.
// An exact isometry of the |k| >= 2 coefficients.
BoundaryState rotate_state(const BoundaryState& st, const SqrtOperator& S, double dt);

// One step of the integrating-factor Heun scheme: exact rotation composed
// with a two-stage explicit treatment of assemble_rhs; modes |k| <= 1 take
// a plain Heun step on (h, hdot) with the unsplit curvature force.  ctx is
// held fixed across the step except for the f-extension, which is
// refreshed for the predictor stage.
BoundaryState step_boundary_state(const BoundaryState& st, const DynamicsContext& ctx, double dt,
                                  const SqrtOperator& S);

struct Trajectory {
  std::vector<double> t;
  std::vector<BoundaryField> h;
  std::vector<BoundaryField> hdot;
  double K3 = 0.0;          // sqrt(kappa) * ||hdot(0)||_{s+1/2} at start
  bool k3_warning = false;  // K3 exceeded the configured bound (run continues)
  double sup_h_norm = 0.0;  // sup over recorded times of ||h||_{s+2}
};

// Integrates h(0) = 0, hdot(0) = f1 over [0, T] with step dt (dt <= 0
// selects the default stiff step).  ctx_path(t) supplies the slow fields;
// the f-extension is refreshed from the current h every step.  Throws
// SimError{blowup} with the failure time if the weighted amplitude of h
// reaches delta0.
Trajectory solve_f_interval(const BoundaryField& f1,
                            const std::function<DynamicsContext(double)>& ctx_path, double kappa,
                            double T, double dt, double K3_max = 50.0, int stride = 1);

// General form starting from an arbitrary pair (h0, hdot0); times in the
// returned trajectory are offsets into [0, T].  The flow stepper uses this
// to continue the boundary evolution across outer steps.
Trajectory solve_f_interval(const BoundaryField& h0, const BoundaryField& hdot0,
                            const std::function<DynamicsContext(double)>& ctx_path, double kappa,
                            double T, double dt, double K3_max = 50.0, int stride = 1);

}  // namespace df
