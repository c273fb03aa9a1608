// Elliptic solvers on the unit disk: Laplace/Poisson with Dirichlet or
// Neumann data, the Helmholtz (Leray) splitting, and variable-coefficient
// solves for the Laplacian pulled back through the near-identity map
// x -> x + grad f.  Flat solves are per-Fourier-mode banded collocation
// systems; pulled-back solves run defect correction with the flat solver
// as preconditioner.
#pragma once

#include "spectral.h"

namespace df {

// Coefficients of the pulled-back Laplacian on the reference disk:
//   (Lap u_img) o map = axx u_xx + 2 axy u_xy + ayy u_yy + bx u_x + by u_y,
// where map = id + grad f and A = (I + D2f)^{-1} (symmetric).  The inverse
// Jacobian entries and det(I + D2f) are kept because several callers need
// them alongside the operator.
struct PulledBackLaplacian {
  GridPtr g;
  InteriorScalar f;                   // generating potential
  InteriorScalar axx, axy, ayy;       // second-order coefficients (symmetric)
  InteriorScalar bx, by;              // first-order coefficients
  InteriorScalar Axx, Axy, Ayy;       // A = (I + D2 f)^{-1}
  InteriorScalar detJ;                // det(I + D2 f)
};

// Builds the coefficient fields from f.  Throws SimError{validation} if
// I + D2f loses positive-definiteness at any grid node (the map is no
// longer a perturbation of the identity there).
PulledBackLaplacian make_pulled_back_laplacian(const InteriorScalar& f);

// Applies the pulled-back operator to nodal values of u (spectral
// derivatives, pointwise coefficient products).
InteriorScalar apply_pulled_back(const PulledBackLaplacian& L, const InteriorScalar& u);

// Harmonic extension of g into the disk (per-mode closed form r^|k|).
InteriorScalar solve_laplace_dirichlet_disk(const BoundaryField& g);

// Lap u = rhs in the disk, u = g on the circle.
InteriorScalar solve_poisson_dirichlet_disk(const InteriorScalar& rhs, const BoundaryField& g);

// Lap u = rhs in the disk, du/dr = g on the circle; the solution is fixed
// by zero disk mean.  The compatibility defect |circle integral of g minus
// disk integral of rhs| is projected out of g; defects above 1e-9 warn,
// defects above 1e-6 throw SimError{validation}.
InteriorScalar solve_laplace_neumann_disk(const InteriorScalar& rhs, const BoundaryField& g);

// X = P + Q with div P = 0, <P, nu> = 0 on the circle, Q = grad(potential),
// potential the zero-mean Neumann potential of div X.
struct Helmholtz {
  InteriorVector P;
  InteriorVector Q;
  InteriorScalar potential;
};
Helmholtz helmholtz_decompose(const InteriorVector& X);

// grad of the Neumann potential of div w (the gradient part of w).
InteriorVector grad_inv_div(const InteriorVector& w);

// The zero-mean potential itself; its boundary trace carries the boundary
// part of the pressure.
InteriorScalar neumann_potential(const InteriorVector& w);

// Pulled-back Dirichlet problem: apply_pulled_back(L, u) = rhs at interior
// nodes, u = g on the circle.  Defect correction, tolerance 1e-11 relative
// to max(1, |rhs|_inf), at most 200 iterations; throws SimError{validation}
// on divergence or iteration exhaustion, reporting the last residual.
InteriorScalar solve_pulled_back_dirichlet(const PulledBackLaplacian& L,
                                           const InteriorScalar& rhs, const BoundaryField& g);

// Harmonic extension in the image domain, pulled back: rhs = 0 above.
InteriorScalar harmonic_extension_perturbed(const PulledBackLaplacian& L, const BoundaryField& g);
InteriorScalar harmonic_extension_perturbed(const InteriorScalar& f, const BoundaryField& g);

// Pulled-back Neumann problem: apply_pulled_back(L, u) = rhs at interior
// nodes and <A grad u, n_img> = gN on the circle, where (nx, ny) are the
// components of the unit outward normal of the image curve sampled at the
// circle nodes.  Zero-mean normalization; compatibility defects of the
// internal flat solves are projected silently.
InteriorScalar solve_pulled_back_neumann(const PulledBackLaplacian& L, const InteriorScalar& rhs,
                                         const BoundaryField& gN, const BoundaryField& nx,
                                         const BoundaryField& ny);

// A w nodally, A = (I + D2 f)^-1.  For a scalar q on the image domain,
// apply_inverse_jacobian(L, grad(q o m)) = (grad q) o m.
InteriorVector apply_inverse_jacobian(const PulledBackLaplacian& L, const InteriorVector& w);

// tr(DX . A): the image-domain divergence of u composed with the map, for
// X = u o m.
InteriorScalar pulled_divergence(const PulledBackLaplacian& L, const InteriorVector& X);

// D(X) . (A V): the image-domain directional derivative (grad_v u) o m for
// X = u o m, V = v o m.
InteriorVector pulled_convect(const PulledBackLaplacian& L, const InteriorVector& X,
                              const InteriorVector& V);

}  // namespace df
