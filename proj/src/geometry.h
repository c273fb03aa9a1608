// Boundary-curve geometry: signed curvature of parameterized closed curves,
// the volume-preserving extension of a boundary displacement potential, the
// curvature of the displaced circle, and the measured symbol table of the
// linearized curvature response.
#pragma once

#include "elliptic.h"

namespace df {

// Closed curve given by its components as functions of the circle parameter.
struct BoundaryCurve {
  BoundaryField x, y;
};

// Displacement potential f with its boundary trace h; the map is id + grad f.
struct VolumePotential {
  InteriorScalar f;
  BoundaryField h;
  double amplitude = 0.0;  // boundary Sobolev norm of h at order s + 2
  double s = 4.0;
  double delta0 = 0.05;
  bool cutoff = false;
  double psi = 1.0;  // cutoff factor applied to the nonlinearity
};

// Eigenvalues ell(k) of the linearized curvature response on mode k,
// measured by finite-difference probes of the exact curve curvature.
struct CurvatureSymbol {
  GridPtr g;
  std::vector<double> ell;  // index k = 0..K
  double at(int k) const { return ell[size_t(k < 0 ? -k : k)]; }
};

// Quintic plateau cutoff: 1 on (-inf, delta0/3], 0 on [2 delta0/3, inf),
// monotone in between; argument is the squared boundary norm.
double psi_cutoff(double t, double delta0);
double psi_cutoff_deriv(double t, double delta0);

// Signed curvature of the curve as a function of the parameter,
// (x' y'' - y' x'') / |gamma'|^3, evaluated pointwise on the padded circle
// grid.  Throws SimError{validation} if |gamma'| < 1e-8 anywhere.
BoundaryField curvature_of_curve(const BoundaryCurve& c);

// Arc length of the closed curve.
double curve_perimeter(const BoundaryCurve& c);

// The image of the unit circle under id + grad f.
BoundaryCurve composed_boundary_curve(const VolumePotential& F);

// Curvature of the displaced circle, composed with the parameterization.
BoundaryField curvature_composed(const VolumePotential& F);

// Volume-preserving extension: solves lap f + psi * det D2f = 0 with trace h
// by Newton iteration from the harmonic extension.  Without the cutoff the
// trace must lie inside the admissible ball (amplitude < delta0).
VolumePotential volume_extension(const BoundaryField& h, bool use_cutoff, double s = 4.0,
                                 double delta0 = 0.05);

// Time derivative of the extension along a trace velocity hdot: solves the
// linearization of the volume constraint at F with Dirichlet data hdot.
InteriorScalar volume_extension_dot(const VolumePotential& F, const BoundaryField& hdot);

// Measured linearized-curvature symbol table for all modes on the grid.
CurvatureSymbol linearized_curvature_symbol(GridPtr g, double s = 4.0, double delta0 = 0.05);

// Per-mode multiplication by the symbol.
BoundaryField apply_symbol(const CurvatureSymbol& S, const BoundaryField& h);

// Pointwise det of the differential of a map given by its components.
InteriorScalar map_jacobian(const InteriorVector& m);

// det(I + D2 f): the Jacobian of id + grad f.
InteriorScalar jacobian_displacement(const InteriorScalar& f);

// Hessian entries of a scalar field (mixed entry symmetrized).
struct Hessian {
  InteriorScalar xx, xy, yy;
};
Hessian interior_hessian(const InteriorScalar& f);

// (D2 f) w nodally, dealiased.
InteriorVector hessian_apply(const Hessian& H, const InteriorVector& w);

}  // namespace df
