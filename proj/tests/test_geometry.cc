#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geometry.h"

using namespace df;

static GridPtr grid() {
  static GridPtr g = Grid::make(31, 32);
  return g;
}

static double bd_eval(const BoundaryField& f, double t) {
  double v = f.c[0].real();
  for (int k = 1; k <= f.g->K; k++) {
    cd e(std::cos(k * t), std::sin(k * t));
    v += 2.0 * (f.c[k] * e).real();
  }
  return v;
}

TEST_CASE("plateau cutoff") {
  const double d0 = 0.05;
  CHECK(psi_cutoff(0.0, d0) == 1.0);
  CHECK(psi_cutoff(d0 / 3.0, d0) == 1.0);
  CHECK(psi_cutoff(2.0 * d0 / 3.0, d0) == 0.0);
  CHECK(psi_cutoff(d0, d0) == 0.0);
  CHECK(psi_cutoff(d0 / 2.0, d0) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 1.0;
  for (int i = 1; i <= 100; i++) {
    double t = d0 * i / 100.0;
    double v = psi_cutoff(t, d0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  // derivative vanishes at the plateau edges and matches a difference quotient
  CHECK(psi_cutoff_deriv(d0 / 3.0, d0) == 0.0);
  CHECK(psi_cutoff_deriv(2.0 * d0 / 3.0, d0) == 0.0);
  double t = 0.45 * d0, eps = 1e-7;
  double fd = (psi_cutoff(t + eps, d0) - psi_cutoff(t - eps, d0)) / (2 * eps);
  CHECK(psi_cutoff_deriv(t, d0) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("curvature of circles and degenerate rejection") {
  auto g = grid();
  BoundaryCurve c;
  c.x = bd_zero(g);
  c.y = bd_zero(g);
  c.x.c[1] = cd(0.5, 0.0);
  c.y.c[1] = cd(0.0, -0.5);
  auto k1 = curvature_of_curve(c);
  CHECK(k1.c[0].real() == doctest::Approx(1.0).epsilon(1e-13));
  for (int k = 1; k <= g->K; k++) CHECK(std::abs(k1.c[k]) <= 1e-13);

  const double rho = 0.7;
  BoundaryCurve cr;
  cr.x = bd_zero(g);
  cr.y = bd_zero(g);
  cr.x.c[1] = cd(0.5 * rho, 0.0);
  cr.y.c[1] = cd(0.0, -0.5 * rho);
  auto kr = curvature_of_curve(cr);
  CHECK(kr.c[0].real() == doctest::Approx(1.0 / rho).epsilon(1e-13));

  BoundaryCurve bad;
  bad.x = bd_zero(g);
  bad.y = bd_zero(g);
  CHECK_THROWS_AS(curvature_of_curve(bad), SimError);
}

TEST_CASE("ellipse curvature and perimeter") {
  auto g = grid();
  const double a = 1.3, b = 0.8;
  BoundaryCurve c;
  c.x = bd_zero(g);
  c.y = bd_zero(g);
  c.x.c[1] = cd(0.5 * a, 0.0);
  c.y.c[1] = cd(0.0, -0.5 * b);
  auto kap = curvature_of_curve(c);
  auto exact = [&](double t) {
    double s = std::sin(t), co = std::cos(t);
    return a * b / std::pow(a * a * s * s + b * b * co * co, 1.5);
  };
  CHECK(bd_eval(kap, 0.0) == doctest::Approx(2.03125).epsilon(1e-8));
  CHECK(bd_eval(kap, 0.7) == doctest::Approx(0.932085734506536).epsilon(1e-8));
  CHECK(bd_eval(kap, M_PI / 2) == doctest::Approx(0.473372781065089).epsilon(1e-8));
  CHECK(bd_eval(kap, 2.0) == doctest::Approx(0.561514478785493).epsilon(1e-8));
  for (double t : {0.3, 1.1, 2.9, 4.4}) CHECK(bd_eval(kap, t) == doctest::Approx(exact(t)).epsilon(1e-8));
  CHECK(curve_perimeter(c) == doctest::Approx(6.691180433392568).epsilon(1e-10));
}

TEST_CASE("volume extension: zero data, jacobian residual, admissibility") {
  auto g = grid();
  auto F0 = volume_extension(bd_zero(g), false);
  CHECK(norm_linf(F0.f) <= 1e-15);

  // 1e-3 cos(2 theta): weighted amplitude 0.088, total map needs the cutoff
  // (still on the psi = 1 plateau, so the full equation is solved)
  BoundaryField h = bd_zero(g);
  h.c[2] = cd(0.5e-3, 0.0);
  auto F = volume_extension(h, true);
  CHECK(norm_linf(jacobian_displacement(F.f) - interior_constant(g, 1.0)) <= 1e-11);
  // the trace is the prescribed h
  auto tr = interior_restrict_boundary(F.f);
  for (int k = 0; k <= g->K; k++) CHECK(std::abs(tr.c[k] - h.c[k]) <= 1e-13);

  // a strictly admissible datum works without the cutoff
  BoundaryField hs = bd_zero(g);
  hs.c[2] = cd(0.25e-3, 0.0);
  auto Fs = volume_extension(hs, false);
  CHECK(norm_linf(jacobian_displacement(Fs.f) - interior_constant(g, 1.0)) <= 1e-11);

  // outside the admissible ball without the cutoff: rejected
  BoundaryField bigger = bd_zero(g);
  bigger.c[2] = cd(0.2, 0.0);
  CHECK_THROWS_AS(volume_extension(bigger, false), SimError);
  // with the cutoff the map is total
  auto Fc = volume_extension(bigger, true);
  CHECK(std::isfinite(norm_linf(Fc.f)));
}

TEST_CASE("volume extension stays quadratically close to the harmonic extension") {
  auto g = grid();
  BoundaryField shape = bd_zero(g);
  shape.c[2] = cd(0.5, 0.0);
  shape.c[3] = cd(0.25, 0.0);
  shape.c[5] = cd(0.0, 0.15);
  double nshape = sobolev_norm_boundary(shape, 6.0);
  std::vector<double> amps = {5e-3, 1e-2, 2e-2, 4e-2};
  std::vector<double> errs;
  for (double a : amps) {
    BoundaryField h = (a / nshape) * shape;
    auto F = volume_extension(h, false);
    auto hH = solve_laplace_dirichlet_disk(h);
    errs.push_back(interior_sobolev_norm(F.f - hH, 4.0));
  }
  // fitted constant stable over a decade of amplitudes
  double cmin = 1e300, cmax = 0;
  for (size_t q = 0; q < amps.size(); q++) {
    double c = errs[q] / (amps[q] * amps[q]);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  CHECK(cmax / cmin <= 1.5);
  double slope = std::log(errs.back() / errs.front()) / std::log(amps.back() / amps.front());
  CHECK(slope >= 1.9);
  CHECK(slope <= 2.1);
}

TEST_CASE("composed curvature: identity, dilation, api agreement, determinism") {
  auto g = grid();
  auto F0 = volume_extension(bd_zero(g), false);
  auto k0 = curvature_composed(F0);
  CHECK(k0.c[0].real() == doctest::Approx(1.0).epsilon(1e-13));
  for (int k = 1; k <= g->K; k++) CHECK(std::abs(k0.c[k]) <= 1e-13);

  // hand-built dilation potential: the image is the circle of radius 1+eps
  const double eps = 1e-2;
  VolumePotential D;
  D.f = interior_from_fn(g, [&](double x, double y) { return 0.5 * eps * (x * x + y * y); });
  D.h = interior_restrict_boundary(D.f);
  auto kd = curvature_composed(D);
  CHECK(kd.c[0].real() == doctest::Approx(1.0 / (1.0 + eps)).epsilon(1e-12));
  for (int k = 1; k <= g->K; k++) CHECK(std::abs(kd.c[k]) <= 1e-12);

  // curvature_composed is curvature_of_curve on the composed boundary curve
  BoundaryField h = bd_zero(g);
  h.c[2] = cd(1e-5, 0.0);
  h.c[4] = cd(0.0, -5e-6);
  auto F = volume_extension(h, false);
  auto ka = curvature_composed(F);
  auto kb = curvature_of_curve(composed_boundary_curve(F));
  for (int k = 0; k <= g->K; k++) CHECK(std::abs(ka.c[k] - kb.c[k]) <= 1e-15);

  // re-running the extension gives bit-identical curvature
  auto F2 = volume_extension(h, false);
  auto kc = curvature_composed(F2);
  for (int k = 0; k <= g->K; k++) {
    CHECK(ka.c[k].real() == kc.c[k].real());
    CHECK(ka.c[k].imag() == kc.c[k].imag());
  }
}

TEST_CASE("rotational equivariance of the composed curvature") {
  auto g = grid();
  BoundaryField h = bd_zero(g);
  h.c[2] = cd(2e-5, 1e-5);
  h.c[3] = cd(-1e-5, 5e-6);
  const double alpha = 0.7;
  BoundaryField hr = h;
  for (int k = 0; k <= g->K; k++) hr.c[k] *= std::exp(cd(0.0, -double(k) * alpha));
  auto ka = curvature_composed(volume_extension(h, false));
  auto kb = curvature_composed(volume_extension(hr, false));
  double e = 0;
  for (int k = 0; k <= g->K; k++)
    e = std::max(e, std::abs(kb.c[k] - ka.c[k] * std::exp(cd(0.0, -double(k) * alpha))));
  CHECK(e <= 1e-10);
}

TEST_CASE("linearized curvature symbol table") {
  auto g = grid();
  auto S = linearized_curvature_symbol(g);
  CHECK(std::abs(S.ell[0]) <= 1e-7);
  CHECK(std::abs(S.ell[1]) <= 1e-5);
  for (int k = 2; k <= g->K; k++) {
    double expect = double(k) * double(k) * double(k) - double(k);
    CHECK(std::abs(S.at(k) - expect) / expect <= 1e-5);
    CHECK(S.at(k) > 0.0);
    if (k > 2) CHECK(S.at(k) > S.at(k - 1));
  }
  // third-order growth: ell(k)/k^3 approaches a constant
  double top = double(g->K);
  CHECK(S.at(g->K) / (top * top * top) == doctest::Approx(1.0).epsilon(2e-3));
  // symmetry through the accessor
  CHECK(S.at(-5) == S.at(5));
}

TEST_CASE("quadratic remainder of the curvature linearization") {
  auto g = grid();
  auto S = linearized_curvature_symbol(g);
  BoundaryField shape = bd_zero(g);
  shape.c[2] = cd(0.5, 0.0);
  shape.c[3] = cd(0.0, 0.3);
  double ns = sobolev_norm_boundary(shape, 6.0);
  std::vector<double> eps = {1e-4, 1e-3, 1e-2};
  std::vector<double> rem;
  for (double e : eps) {
    BoundaryField h = (e / ns) * shape;
    auto F = volume_extension(h, false);
    auto kap = curvature_composed(F);
    BoundaryField lin = apply_symbol(S, h);
    BoundaryField r = kap - lin;
    r.c[0] -= cd(1.0, 0.0);
    rem.push_back(sobolev_norm_boundary(r, 0.0));
  }
  double slope = std::log(rem.back() / rem.front()) / std::log(eps.back() / eps.front());
  CHECK(slope >= 1.9);
  double cmin = 1e300, cmax = 0;
  for (size_t q = 0; q < eps.size(); q++) {
    double c = rem[q] / (eps[q] * eps[q]);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  CHECK(cmax / cmin <= 1.5);
}

TEST_CASE("map jacobians") {
  auto g = grid();
  InteriorVector id(g);
  id.x = interior_from_fn(g, [](double x, double) { return x; });
  id.y = interior_from_fn(g, [](double, double y) { return y; });
  CHECK(norm_linf(map_jacobian(id) - interior_constant(g, 1.0)) <= 1e-12);

  const double al = 0.9;
  InteriorVector rot(g);
  rot.x = interior_from_fn(g, [&](double x, double y) { return std::cos(al) * x - std::sin(al) * y; });
  rot.y = interior_from_fn(g, [&](double x, double y) { return std::sin(al) * x + std::cos(al) * y; });
  CHECK(norm_linf(map_jacobian(rot) - interior_constant(g, 1.0)) <= 1e-12);

  // an admissible displacement is volume preserving on the whole grid
  BoundaryField h = bd_zero(g);
  h.c[2] = cd(2e-5, 0.0);
  h.c[3] = cd(0.0, -1.2e-5);
  auto F = volume_extension(h, false);
  auto grad = interior_gradient(F.f);
  InteriorVector m(g);
  m.x = id.x + grad.x;
  m.y = id.y + grad.y;
  CHECK(norm_linf(map_jacobian(m) - interior_constant(g, 1.0)) <= 1e-9);
  CHECK(norm_linf(jacobian_displacement(F.f) - interior_constant(g, 1.0)) <= 1e-9);
}
