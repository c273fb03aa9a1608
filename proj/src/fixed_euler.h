// Fixed-boundary incompressible Euler on the unit disk in Lagrangian form.
// The flow map zeta stays volume- and boundary-preserving; its acceleration
// is the composed gradient part of the convective derivative, which is the
// Lagrangian form of the pressure gradient.  This solver provides the
// infinite-stiffness reference trajectory for the moving-boundary one.
#pragma once

#include "config.h"
#include "elliptic.h"
#include "flow_map.h"
#include "runner.h"

namespace df {

struct FixedState {
  FlowMap zeta;          // volume- and boundary-preserving flow map
  InteriorVector zdot;   // label-frame velocity (zeta-dot)
  double t = 0.0;
};

// Z(zeta, X) = (Q(grad_{X o zeta^{-1}} X o zeta^{-1})) o zeta: the composed
// gradient part of the convective acceleration.  The Lagrangian acceleration
// of the flow is exactly this field (equivalently, minus the composed
// pressure gradient).  Optional warm-start seed for the map inversion; the
// computed inverse can be captured for reuse.
InteriorVector z_map(const FlowMap& zeta, const InteriorVector& X,
                     const FlowMap* inv_seed = nullptr, FlowMap* inv_out = nullptr);

// Mean-free pressure of the fixed-boundary flow with Eulerian velocity
// theta: Lap pi = -div(grad_theta theta), d_nu pi = -<grad_theta theta, nu>.
InteriorScalar euler_pressure(const InteriorVector& theta);

// Validates that theta0 is divergence-free and tangent, returns the state
// at the identity.
FixedState fixed_initial_state(const InteriorVector& theta0);

// One classical RK4 step of the second-order system.  The updated map's
// boundary ring is renormalized onto the circle (the constraint manifold).
FixedState rk4_step(const FixedState& s, double dt);

// Replaces zdot by (P(zdot o zeta^{-1})) o zeta, removing the gradient part
// the discrete integration leaks.
void reproject_velocity(FixedState& s);

// End-to-end driver: tangent part of the configured preset, RK4 march with
// periodic velocity re-projection, rows with the shared run schema.
RunRecord run_fixed_boundary(const SimConfig& config);

}  // namespace df
