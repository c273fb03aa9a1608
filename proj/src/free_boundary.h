// The free-boundary time stepper: each step factorizes the current map,
// solves the interior pressure, marches the stiff boundary pair, solves the
// harmonic h-potential on the moving domain, transports the divergence-free
// part z, and closes the loop with a per-step Picard iteration on the map
// update.
#pragma once

#include <memory>

#include "boundary_dynamics.h"
#include "flow_map.h"
#include "runner.h"

namespace df {

// Frame cache for one accepted state (or Picard end iterate): everything
// the z transport and the pressure reconstruction need about the map.
struct ZSnapshot {
  GridPtr g;
  Decomposition dec;
  FlowMap binv;            // inverse of dec.beta
  MapPoints bpts, bipts;   // evaluation points of beta and its inverse
  PulledBackLaplacian L;   // pulled-back Laplacian at dec.f
  MapJacobian Aeta;        // nodal (D eta)^-1 of the full map
  BoundaryField nx_img, ny_img;  // unit outward normal of the image curve
                                 // at the uniform circle nodes
  BoundaryField nlab_x, nlab_y;  // the same normal pulled to particle labels
  std::vector<double> speed;     // |gamma'| of the image curve at the nodes
  std::vector<double> tstar;     // label parameters hit by the uniform
                                 // angles under the boundary map of beta
  InteriorVector ucomp;          // map velocity at labels
  InteriorVector gradh;          // grad h at labels
  BoundaryField ndot_x, ndot_y;  // label-frame rate of the image normal
};

struct FreeBoundaryState {
  double t = 0.0;
  double kappa = 0.0;
  FlowMap eta;
  Decomposition dec;
  BoundaryField fb, fbdot;  // the stiff boundary pair (trace of f and rate)
  InteriorVector z;         // w composed with the map
  InteriorVector gradh;     // grad h composed with the map
  InteriorVector ucomp;     // z + gradh = map velocity at labels
  InteriorVector vtil;      // transport field z o beta^-1 (id + grad f frame)
  InteriorScalar q0til;     // interior pressure composed with id + grad f
  BoundaryField ndot_x, ndot_y;  // accepted normal rate (label frame)
  double chi_gap = 0.0;
  int picard_iters = 0;
  std::shared_ptr<const ZSnapshot> snap;  // built lazily, shared by copies
};

// Builds the t = 0 state from a velocity field: Helmholtz split u0 = z +
// grad h, f(0) = 0, fdot(0) from the boundary trace of the Neumann
// potential of u0.  Throws SimError{validation} if u0 is not
// divergence-free to 1e-7 (relative).
FreeBoundaryState initial_state(const InteriorVector& u0, double kappa, double s = 4.0,
                                double delta0 = 0.05);

// Interior pressure: solves the pulled-back Dirichlet problem with
// rhs = -div(grad_u u) composed with the map and zero boundary values.
// util is u composed with id + grad f.
InteriorScalar solve_interior_pressure(const InteriorVector& util, const PulledBackLaplacian& L);
InteriorScalar solve_interior_pressure(const InteriorVector& util, const VolumePotential& F);

// Harmonic h on the moving domain from Neumann data built out of
// (grad fdot_ext + (D2 f) v + v); returns grad h composed with id + grad f.
// Throws SimError{validation} when the data violates the compatibility
// condition (volume non-conservation upstream).
InteriorVector solve_h_neumann(const VolumePotential& F, const PulledBackLaplacian& L,
                               const BoundaryField& fdot, const InteriorVector& vtil);
InteriorVector solve_h_neumann(const VolumePotential& F, const BoundaryField& fdot,
                               const InteriorVector& vtil);

// Frame cache builder; seed warm-starts the inversion of beta.
std::shared_ptr<const ZSnapshot> make_snapshot(const Decomposition& dec, const FlowMap& eta,
                                               const InteriorVector& ucomp,
                                               const InteriorVector& gradh,
                                               const BoundaryField& ndot_x,
                                               const BoundaryField& ndot_y,
                                               const FlowMap* binv_seed = nullptr);

// Right-hand side of the composed transport equation for z at the frame of
// one snapshot.
InteriorVector z_rhs(const ZSnapshot& snap, const InteriorVector& z);

// One explicit RK2 (midpoint-free Heun) update of z across [t, t+dt] given
// the start slope k1 = z_rhs(start, z) and the end-frame snapshot.
InteriorVector step_z(const ZSnapshot& end, const InteriorVector& z, const InteriorVector& k1,
                      double dt);

// One outer step by per-step Picard iteration; on non-convergence the step
// recursively splits into two half steps (depth at most 5) before raising
// SimError{blowup}.
FreeBoundaryState advance_timestep(const FreeBoundaryState& state, double dt, double picard_tol,
                                   int picard_max, int substeps = 4);

// (E_kin, E_surf, E_total): kinetic by disk quadrature of the map velocity,
// surface as kappa times the perimeter excess over 2 pi.
struct EnergyTriple {
  double kin = 0.0, surf = 0.0, total = 0.0;
};
EnergyTriple energy(const FreeBoundaryState& state, double kappa);

// The composed pressure gradient (grad p) o eta at labels, p = p0 + kappa
// times the harmonic extension of the image curvature.
InteriorVector pressure_gradient_composed(const FreeBoundaryState& state);

// The composed vorticity curl(u) o eta at labels.
InteriorScalar composed_vorticity(const FreeBoundaryState& state);

// Full run: builds the initial state from the config preset, marches to
// t_end, records diagnostics every config.stride steps (plus t = 0 and the
// final time).  Numerical blow-up is captured in record.status; validation
// errors propagate.  Writes output files when config.output_dir is set.
RunRecord run_free_boundary(const SimConfig& config);

}  // namespace df
