// Flow maps of the closed unit disk sampled on the polar grid: off-node
// evaluation, composition, Newton inversion, Jacobians, and the
// exponential-map factorization eta = (id + grad f) o beta into a
// boundary-fixing volume-preserving part and a normal displacement
// generated by a potential.
#pragma once

#include "geometry.h"

namespace df {

// A map of the closed disk, stored as its displacement from the identity at
// the grid nodes.  The flags record which invariance class the map is meant
// to live in; constructors in this module set them, and the unit tests pin
// the tolerances they imply.
struct FlowMap {
  InteriorVector disp;
  bool volume_preserving = false;
  bool boundary_preserving = false;
};

FlowMap identity_map(GridPtr g);
FlowMap rotation_map(GridPtr g, double angle);

// Cached off-node evaluators for a map's displacement and displacement
// Jacobian (one Fourier-Chebyshev evaluator per entry).
struct MapEval {
  GridPtr g;
  ModeCheb dx, dy;                // displacement components
  ModeCheb jxx, jxy, jyx, jyy;    // displacement Jacobian entries
};
MapEval make_map_eval(const FlowMap& m);

// Image of the polar point (rr, th) under the map.
void eval_map(const MapEval& e, double rr, double th, double* X, double* Y);

// Polar coordinates of every node's image under a disk-preserving map,
// cached so that many fields can be composed with the same map cheaply.
// Image points may stick out of the closed disk by a radial excursion of at
// most 1e-6 (they are projected back onto the circle); anything farther
// throws SimError{validation}.
struct MapPoints {
  GridPtr g;
  std::vector<double> rr, th;  // node-major, length Nr * Nth
};
MapPoints map_points(const FlowMap& m);

// u evaluated at the image of every node (u o m).
InteriorScalar compose_scalar(const InteriorScalar& u, const MapPoints& p);
InteriorVector compose_vector(const InteriorVector& u, const MapPoints& p);
InteriorScalar compose_scalar(const InteriorScalar& u, const FlowMap& m);
InteriorVector compose_vector(const InteriorVector& u, const FlowMap& m);

// outer o inner; inner must be disk-preserving.
FlowMap compose_maps(const FlowMap& outer, const FlowMap& inner);

// Per-node Newton inversion of a disk-preserving map.  The optional seed
// (e.g. the inverse from a nearby time level) starts the iteration.
// Throws SimError{validation} if any node fails to converge.
FlowMap invert_map(const FlowMap& m, const FlowMap* seed = nullptr);

// Pointwise determinant of the differential of the map.
InteriorScalar flow_jacobian(const FlowMap& m);

// Factorization eta = (id + grad f) o beta.
struct Decomposition {
  FlowMap beta;          // volume- and boundary-preserving
  VolumePotential f;     // normal-displacement potential
};

// (id + grad f) o beta as a FlowMap (not volume/boundary preserving).
FlowMap compose_decomposition(const Decomposition& d);

// max-norm of (id + grad f) o beta - eta over all grid nodes.
double composition_defect(const Decomposition& d, const FlowMap& eta);

// Splits eta into the factorization above by a fixed-point iteration:
// the trace h of f is corrected from the radial mismatch of the boundary
// image curves (as graphs over the polar angle), beta is recovered by
// Newton preimages under id + grad f and projected onto the circle at the
// boundary ring.  Converges when the composition defect is <= 1e-9; throws
// SimError{validation} after 50 sweeps (boundary image outside the tube
// where the factorization is unique).  A seed from a nearby eta warm-starts
// both factors.
Decomposition decompose_embedding(const FlowMap& eta, const Decomposition* seed = nullptr,
                                  double s = 4.0, double delta0 = 0.05);

// ---- angle-graph utilities (shared with the boundary solves) ----

// Given samples a_j of a strictly increasing angle map a(theta) = theta +
// periodic part at the uniform circle nodes theta_j, find the parameters
// t_j with a(t_j) = theta_j (trigonometric interpolation + Newton).
std::vector<double> invert_angle_map(GridPtr g, const std::vector<double>& angle_at_node);

// Evaluate the trigonometric interpolant of a boundary field at arbitrary
// parameter values.
std::vector<double> bd_eval_at(const BoundaryField& f, const std::vector<double>& t);

// Entries of (Dm)^-1 at the grid nodes.
struct MapJacobian {
  InteriorScalar a11, a12, a21, a22;
};

// Nodal inverse of the differential of m; throws SimError{validation} if
// det Dm drops below 0.1 anywhere (the map is no longer a perturbation of
// a volume-preserving embedding).
MapJacobian inverse_jacobian(const FlowMap& m);

// (Dm)^-1 w nodally.
InteriorVector apply_map_jacobian(const MapJacobian& A, const InteriorVector& w);

}  // namespace df
