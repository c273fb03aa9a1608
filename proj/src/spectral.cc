#include "spectral.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

namespace df {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int pad_size(int nth) {
  int n = (3 * nth) / 2;
  if (n % 2) n++;
  return n;
}

int sigma_of(int k) { return (std::abs(k) % 2 == 0) ? 1 : -1; }

// Apply a real radial matrix to a complex profile.
void apply_radial(const Eigen::MatrixXd& A, const cd* in, cd* out, int n) {
  Eigen::VectorXd re(n), im(n);
  for (int i = 0; i < n; i++) {
    re[i] = in[i].real();
    im[i] = in[i].imag();
  }
  Eigen::VectorXd ore = A * re, oim = A * im;
  for (int i = 0; i < n; i++) out[i] = cd(ore[i], oim[i]);
}

}  // namespace

BoundaryField::BoundaryField(GridPtr gr) : g(std::move(gr)), c(g->K + 1, cd(0, 0)) {}
InteriorScalar::InteriorScalar(GridPtr gr)
    : g(std::move(gr)), val(size_t(g->Nr) * g->Nth, 0.0), gstride(g->Nth) {}
DiskSpec::DiskSpec(GridPtr gr) : g(std::move(gr)), c(size_t(2 * g->K + 1) * g->Nr, cd(0, 0)) {}
cd& DiskSpec::at(int k, int i) { return c[size_t(k + g->K) * g->Nr + i]; }
cd DiskSpec::at(int k, int i) const { return c[size_t(k + g->K) * g->Nr + i]; }
PadScalar::PadScalar(GridPtr gr) : g(std::move(gr)), v(size_t(g->Nr) * g->Npad, 0.0) {}
PadBoundary::PadBoundary(GridPtr gr) : g(std::move(gr)), v(g->Npad, 0.0) {}

struct Grid::Plans {
  fftw_plan r2c_nth{}, c2r_nth{}, r2c_pad{}, c2r_pad{};
  fftw_plan r2c_nth1{}, c2r_nth1{}, r2c_pad1{}, c2r_pad1{};
  fftw_plan dct{};
};

GridPtr Grid::make(int K, int Nr) {
  if (K < 2 || Nr < 4)
    throw SimError(ErrKind::validation, "grid: need K >= 2 and Nr >= 4");
  std::shared_ptr<Grid> p(new Grid());
  p->build(K, Nr);
  return p;
}

void Grid::build(int K_, int Nr_) {
  K = K_;
  Nr = Nr_;
  Nth = 2 * K + 2;
  M = 2 * Nr;
  Npad = pad_size(Nth);

  theta.resize(Nth);
  for (int j = 0; j < Nth; j++) theta[j] = 2.0 * M_PI * j / Nth;
  thpad.resize(Npad);
  for (int j = 0; j < Npad; j++) thpad[j] = 2.0 * M_PI * j / Npad;

  // Chebyshev-Lobatto x_m = cos(m pi/(M-1)), m = 0..M-1; positive half kept,
  // stored ascending: r_i = x_{Nr-1-i}.
  std::vector<double> x(M);
  for (int m = 0; m < M; m++) x[m] = std::cos(M_PI * m / (M - 1));
  r.resize(Nr);
  for (int i = 0; i < Nr; i++) r[i] = x[Nr - 1 - i];

  // Full differentiation matrix.
  Eigen::MatrixXd D(M, M);
  std::vector<double> cw(M, 1.0);
  cw[0] = cw[M - 1] = 2.0;
  for (int a = 0; a < M; a++)
    for (int b = 0; b < M; b++) {
      if (a != b)
        D(a, b) = (cw[a] / cw[b]) * ((a + b) % 2 ? -1.0 : 1.0) / (x[a] - x[b]);
    }
  for (int a = 0; a < M; a++) {
    double s = 0;
    for (int b = 0; b < M; b++)
      if (b != a) s += D(a, b);
    D(a, a) = -s;
  }
  Eigen::MatrixXd D2 = D * D;

  // Parity fold onto the positive nodes.
  D1e.resize(Nr, Nr);
  D1o.resize(Nr, Nr);
  D2e.resize(Nr, Nr);
  D2o.resize(Nr, Nr);
  for (int i = 0; i < Nr; i++)
    for (int j = 0; j < Nr; j++) {
      int a = Nr - 1 - i, b = Nr - 1 - j, bm = M - 1 - b;
      D1e(i, j) = D(a, b) + D(a, bm);
      D1o(i, j) = D(a, b) - D(a, bm);
      D2e(i, j) = D2(a, b) + D2(a, bm);
      D2o(i, j) = D2(a, b) - D2(a, bm);
    }

  // Quadrature weights for int_0^1 u(r) r dr, exact on the collocation space:
  // Chebyshev moments I_n = int_0^1 T_n(r) r dr, then cardinal weights.
  std::vector<double> I(M);
  auto cq = [](int m) {  // cos(m pi / 2)
    switch (((m % 4) + 4) % 4) {
      case 0: return 1.0;
      case 2: return -1.0;
      default: return 0.0;
    }
  };
  for (int n = 0; n < M; n++) {
    double t1 = (1.0 - cq(2 + n)) / (2 + n);
    double t2 = (n == 2) ? 0.0 : (1.0 - cq(2 - n)) / (2 - n);
    I[n] = 0.25 * (t1 + t2);
  }
  std::vector<double> wfull(M, 0.0);
  for (int m = 0; m < M; m++) {
    double cm = (m == 0 || m == M - 1) ? 1.0 : 2.0;
    double acc = 0;
    for (int n = 0; n < M; n++) {
      double sn = (n == 0 || n == M - 1) ? 0.5 / (M - 1) : 1.0 / (M - 1);
      acc += sn * cm * std::cos(M_PI * double(n) * double(m) / (M - 1)) * I[n];
    }
    wfull[m] = acc;
  }
  wr.resize(Nr);
  for (int i = 0; i < Nr; i++) {
    int a = Nr - 1 - i;
    wr[i] = wfull[a] + wfull[M - 1 - a];
  }

  // Per-mode flat Laplacian rows and factorizations.
  mlap_.resize(K + 1);
  luD_.resize(K + 1);
  luN_.resize(K + 1);
  Eigen::VectorXd invr(Nr), invr2(Nr);
  for (int i = 0; i < Nr; i++) {
    invr[i] = 1.0 / r[i];
    invr2[i] = invr[i] * invr[i];
  }
  for (int k = 0; k <= K; k++) {
    const Eigen::MatrixXd& D1s = (sigma_of(k) > 0) ? D1e : D1o;
    const Eigen::MatrixXd& D2s = (sigma_of(k) > 0) ? D2e : D2o;
    Eigen::MatrixXd L = D2s + invr.asDiagonal() * D1s;
    L -= double(k) * double(k) * Eigen::MatrixXd(invr2.asDiagonal());
    mlap_[k] = L;
    Eigen::MatrixXd Ld = L;
    Ld.row(Nr - 1).setZero();
    Ld(Nr - 1, Nr - 1) = 1.0;
    luD_[k].compute(Ld);
    if (k >= 1) {
      Eigen::MatrixXd Ln = L;
      Ln.row(Nr - 1) = D1s.row(Nr - 1);
      luN_[k].compute(Ln);
    }
  }
  // k = 0 Neumann: bordered system with a Lagrange multiplier and the
  // zero-mean row (disk-weighted).
  {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(Nr + 1, Nr + 1);
    B.block(0, 0, Nr, Nr) = mlap_[0];
    for (int i = 0; i < Nr - 1; i++) B(i, Nr) = 1.0;
    B.row(Nr - 1).setZero();
    B.block(Nr - 1, 0, 1, Nr) = D1e.row(Nr - 1);
    for (int j = 0; j < Nr; j++) B(Nr, j) = wr[j];
    luN0_.compute(B);
  }

  // FFTW plans (deterministic ESTIMATE; UNALIGNED so new-array execution is
  // valid on ordinary vectors).
  plans_ = std::make_unique<Plans>();
  std::lock_guard<std::mutex> lk(planner_mutex());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<double> tr(size_t(Nr) * Npad, 0.0);
  std::vector<cd> tc(size_t(Nr) * (Npad / 2 + 1), cd(0, 0));
  auto mkr2c = [&](int n, int rows) {
    int nn[1] = {n};
    return fftw_plan_many_dft_r2c(1, nn, rows, tr.data(), nullptr, 1, n,
                                  reinterpret_cast<fftw_complex*>(tc.data()), nullptr, 1,
                                  n / 2 + 1, flags);
  };
  auto mkc2r = [&](int n, int rows) {
    int nn[1] = {n};
    return fftw_plan_many_dft_c2r(1, nn, rows, reinterpret_cast<fftw_complex*>(tc.data()),
                                  nullptr, 1, n / 2 + 1, tr.data(), nullptr, 1, n, flags);
  };
  plans_->r2c_nth = mkr2c(Nth, Nr);
  plans_->c2r_nth = mkc2r(Nth, Nr);
  plans_->r2c_pad = mkr2c(Npad, Nr);
  plans_->c2r_pad = mkc2r(Npad, Nr);
  plans_->r2c_nth1 = mkr2c(Nth, 1);
  plans_->c2r_nth1 = mkc2r(Nth, 1);
  plans_->r2c_pad1 = mkr2c(Npad, 1);
  plans_->c2r_pad1 = mkc2r(Npad, 1);
  {
    std::vector<double> a(M), b(M);
    plans_->dct = fftw_plan_r2r_1d(M, a.data(), b.data(), FFTW_REDFT00, flags);
  }
}

Grid::~Grid() {
  if (!plans_) return;
  std::lock_guard<std::mutex> lk(planner_mutex());
  for (fftw_plan p : {plans_->r2c_nth, plans_->c2r_nth, plans_->r2c_pad, plans_->c2r_pad,
                      plans_->r2c_nth1, plans_->c2r_nth1, plans_->r2c_pad1, plans_->c2r_pad1,
                      plans_->dct})
    if (p) fftw_destroy_plan(p);
}

const Eigen::MatrixXd& Grid::mode_lap(int k) const { return mlap_[std::abs(k)]; }
const Eigen::PartialPivLU<Eigen::MatrixXd>& Grid::lu_dirichlet(int k) const {
  return luD_[std::abs(k)];
}
const Eigen::PartialPivLU<Eigen::MatrixXd>& Grid::lu_neumann(int k) const {
  return luN_[std::abs(k)];
}
const Eigen::PartialPivLU<Eigen::MatrixXd>& Grid::lu_neumann0() const { return luN0_; }

void Grid::fft_rows(const double* in, cd* out, int n, int rows) const {
  fftw_plan p = (n == Nth) ? (rows == Nr ? plans_->r2c_nth : plans_->r2c_nth1)
                           : (rows == Nr ? plans_->r2c_pad : plans_->r2c_pad1);
  fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  double s = 1.0 / n;
  for (size_t q = 0; q < size_t(rows) * (n / 2 + 1); q++) out[q] *= s;
}

void Grid::ifft_rows(const cd* in, double* out, int n, int rows) const {
  // c2r destroys its input; work on a scratch copy.
  std::vector<cd> scratch(in, in + size_t(rows) * (n / 2 + 1));
  fftw_plan p = (n == Nth) ? (rows == Nr ? plans_->c2r_nth : plans_->c2r_nth1)
                           : (rows == Nr ? plans_->c2r_pad : plans_->c2r_pad1);
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

void Grid::dct_profile(const double* in, double* out) const {
  std::vector<double> a(in, in + M);
  fftw_execute_r2r(plans_->dct, a.data(), out);
}

// ---- boundary ----

BoundaryField bd_transform(GridPtr g, const std::vector<double>& samples) {
  if (int(samples.size()) != g->Nth)
    throw SimError(ErrKind::validation, "bd_transform: expected " + std::to_string(g->Nth) +
                                            " samples, got " + std::to_string(samples.size()));
  std::vector<cd> bins(g->Nth / 2 + 1);
  g->fft_rows(samples.data(), bins.data(), g->Nth, 1);
  BoundaryField f(g);
  for (int k = 0; k <= g->K; k++) f.c[k] = bins[k];
  return f;
}

std::vector<double> bd_inverse(const BoundaryField& f) {
  const auto& g = f.g;
  std::vector<cd> bins(g->Nth / 2 + 1, cd(0, 0));
  for (int k = 0; k <= g->K; k++) bins[k] = f.c[k];
  std::vector<double> out(g->Nth);
  g->ifft_rows(bins.data(), out.data(), g->Nth, 1);
  return out;
}

BoundaryField bd_derivative(const BoundaryField& f, int order) {
  BoundaryField out(f.g);
  for (int k = 0; k <= f.g->K; k++) {
    cd m(1, 0);
    for (int q = 0; q < order; q++) m *= cd(0, k);
    out.c[k] = m * f.c[k];
  }
  return out;
}

double sobolev_norm_boundary(const BoundaryField& f, double s) {
  double acc = std::pow(1.0, s) * std::norm(f.c[0]);
  for (int k = 1; k <= f.g->K; k++)
    acc += 2.0 * std::pow(1.0 + double(k) * k, s) * std::norm(f.c[k]);
  return std::sqrt(acc);
}

BoundaryField dirichlet_to_neumann_disk(const BoundaryField& h) {
  BoundaryField out(h.g);
  for (int k = 0; k <= h.g->K; k++) out.c[k] = double(k) * h.c[k];
  return out;
}

PadBoundary bd_to_pad(const BoundaryField& f) {
  const auto& g = f.g;
  std::vector<cd> bins(g->Npad / 2 + 1, cd(0, 0));
  for (int k = 0; k <= g->K; k++) bins[k] = f.c[k];
  PadBoundary p(g);
  g->ifft_rows(bins.data(), p.v.data(), g->Npad, 1);
  return p;
}

BoundaryField bd_from_pad(const PadBoundary& p) {
  const auto& g = p.g;
  std::vector<cd> bins(g->Npad / 2 + 1);
  g->fft_rows(p.v.data(), bins.data(), g->Npad, 1);
  BoundaryField f(g);
  for (int k = 0; k <= g->K; k++) f.c[k] = bins[k];
  return f;
}

BoundaryField bd_zero(GridPtr g) { return BoundaryField(std::move(g)); }

double bd_mean(const BoundaryField& f) { return f.c[0].real(); }

BoundaryField bd_mean_free(const BoundaryField& f) {
  BoundaryField out = f;
  out.c[0] = cd(0, 0);
  return out;
}

BoundaryField operator+(const BoundaryField& a, const BoundaryField& b) {
  BoundaryField out = a;
  for (size_t i = 0; i < out.c.size(); i++) out.c[i] += b.c[i];
  return out;
}
BoundaryField operator-(const BoundaryField& a, const BoundaryField& b) {
  BoundaryField out = a;
  for (size_t i = 0; i < out.c.size(); i++) out.c[i] -= b.c[i];
  return out;
}
BoundaryField operator*(double s, const BoundaryField& a) {
  BoundaryField out = a;
  for (auto& z : out.c) z *= s;
  return out;
}

// ---- interior transforms ----

DiskSpec to_spec(const InteriorScalar& u) {
  const auto& g = u.g;
  int nb = g->Nth / 2 + 1;
  std::vector<cd> bins(size_t(g->Nr) * nb);
  g->fft_rows(u.val.data(), bins.data(), g->Nth, g->Nr);
  DiskSpec s(g);
  for (int i = 0; i < g->Nr; i++)
    for (int k = 0; k <= g->K; k++) {
      cd z = bins[size_t(i) * nb + k];
      s.at(k, i) = z;
      if (k > 0) s.at(-k, i) = std::conj(z);
    }
  return s;
}

InteriorScalar from_spec(const DiskSpec& s) {
  const auto& g = s.g;
  int nb = g->Nth / 2 + 1;
  std::vector<cd> bins(size_t(g->Nr) * nb, cd(0, 0));
  for (int i = 0; i < g->Nr; i++)
    for (int k = 0; k <= g->K; k++) bins[size_t(i) * nb + k] = s.at(k, i);
  InteriorScalar u(g);
  g->ifft_rows(bins.data(), u.val.data(), g->Nth, g->Nr);
  return u;
}

PadScalar spec_to_pad(const DiskSpec& s) {
  const auto& g = s.g;
  int nb = g->Npad / 2 + 1;
  std::vector<cd> bins(size_t(g->Nr) * nb, cd(0, 0));
  for (int i = 0; i < g->Nr; i++)
    for (int k = 0; k <= g->K; k++) bins[size_t(i) * nb + k] = s.at(k, i);
  PadScalar p(g);
  g->ifft_rows(bins.data(), p.v.data(), g->Npad, g->Nr);
  return p;
}

DiskSpec pad_to_spec(const PadScalar& p) {
  const auto& g = p.g;
  int nb = g->Npad / 2 + 1;
  std::vector<cd> bins(size_t(g->Nr) * nb);
  g->fft_rows(p.v.data(), bins.data(), g->Npad, g->Nr);
  DiskSpec s(g);
  for (int i = 0; i < g->Nr; i++)
    for (int k = 0; k <= g->K; k++) {
      cd z = bins[size_t(i) * nb + k];
      s.at(k, i) = z;
      if (k > 0) s.at(-k, i) = std::conj(z);
    }
  return s;
}

PadScalar to_pad(const InteriorScalar& u) { return spec_to_pad(to_spec(u)); }
InteriorScalar from_pad(const PadScalar& p) { return from_spec(pad_to_spec(p)); }

// ---- derivatives ----

DiskSpec d_theta(const DiskSpec& s) {
  DiskSpec out(s.g);
  for (int k = -s.g->K; k <= s.g->K; k++)
    for (int i = 0; i < s.g->Nr; i++) out.at(k, i) = cd(0, k) * s.at(k, i);
  return out;
}

DiskSpec d_r(const DiskSpec& s) {
  const auto& g = s.g;
  DiskSpec out(g);
  std::vector<cd> tmp(g->Nr);
  for (int k = -g->K; k <= g->K; k++) {
    const Eigen::MatrixXd& D1s = (sigma_of(k) > 0) ? g->D1e : g->D1o;
    apply_radial(D1s, &s.c[size_t(k + g->K) * g->Nr], tmp.data(), g->Nr);
    for (int i = 0; i < g->Nr; i++) out.at(k, i) = tmp[i];
  }
  return out;
}

namespace {
// (d/dr -+ m/r) applied to mode-m profile; lower. raise selects the sign.
void ladder(const Grid& g, const cd* prof, int m, int up, cd* out) {
  const Eigen::MatrixXd& D1s = (sigma_of(m) > 0) ? g.D1e : g.D1o;
  apply_radial(D1s, prof, out, g.Nr);
  for (int i = 0; i < g.Nr; i++) out[i] += double(up) * double(m) / g.r[i] * prof[i];
}
}  // namespace

// d_x: target mode k receives 1/2*(ladder-up from k-1) + 1/2*(ladder-down from k+1)
// where ladder-up on mode m is (d/dr - m/r), ladder-down is (d/dr + m/r).
DiskSpec d_x(const DiskSpec& s) {
  const auto& g = s.g;
  DiskSpec out(g);
  std::vector<cd> t(g->Nr);
  for (int k = -g->K; k <= g->K; k++) {
    for (int i = 0; i < g->Nr; i++) out.at(k, i) = 0;
    if (k - 1 >= -g->K) {
      ladder(*g, &s.c[size_t(k - 1 + g->K) * g->Nr], k - 1, -1, t.data());
      for (int i = 0; i < g->Nr; i++) out.at(k, i) += 0.5 * t[i];
    }
    if (k + 1 <= g->K) {
      ladder(*g, &s.c[size_t(k + 1 + g->K) * g->Nr], k + 1, +1, t.data());
      for (int i = 0; i < g->Nr; i++) out.at(k, i) += 0.5 * t[i];
    }
  }
  return out;
}

DiskSpec d_y(const DiskSpec& s) {
  const auto& g = s.g;
  DiskSpec out(g);
  std::vector<cd> t(g->Nr);
  const cd half_over_i = cd(0, -0.5);  // 1/(2i)
  for (int k = -g->K; k <= g->K; k++) {
    for (int i = 0; i < g->Nr; i++) out.at(k, i) = 0;
    if (k - 1 >= -g->K) {
      ladder(*g, &s.c[size_t(k - 1 + g->K) * g->Nr], k - 1, -1, t.data());
      for (int i = 0; i < g->Nr; i++) out.at(k, i) += half_over_i * t[i];
    }
    if (k + 1 <= g->K) {
      ladder(*g, &s.c[size_t(k + 1 + g->K) * g->Nr], k + 1, +1, t.data());
      for (int i = 0; i < g->Nr; i++) out.at(k, i) -= half_over_i * t[i];
    }
  }
  return out;
}

InteriorVector interior_gradient(const InteriorScalar& u) {
  DiskSpec s = to_spec(u);
  InteriorVector out;
  out.x = from_spec(d_x(s));
  out.y = from_spec(d_y(s));
  return out;
}

InteriorScalar interior_divergence(const InteriorVector& X) {
  return from_spec(d_x(to_spec(X.x))) + from_spec(d_y(to_spec(X.y)));
}

InteriorScalar interior_curl2d(const InteriorVector& X) {
  return from_spec(d_x(to_spec(X.y))) - from_spec(d_y(to_spec(X.x)));
}

namespace {
void cheb_coeffs(const Grid& g, const cd* prof, int k, std::vector<cd>& out);

// Coefficients of the derivative (standard descending recurrence).
void cheb_deriv(const std::vector<cd>& a, std::vector<cd>& b) {
  const int M = int(a.size());
  b.assign(M, cd(0, 0));
  if (M < 2) return;
  b[M - 2] = 2.0 * double(M - 1) * a[M - 1];
  for (int n = M - 2; n >= 1; n--) b[n - 1] = b[n + 1] + 2.0 * double(n) * a[n];
  b[0] *= 0.5;
}

// Values of a coefficient vector on the full Lobatto grid.
void cheb_synth(const Grid& g, const std::vector<cd>& a, std::vector<double>& re,
                std::vector<double>& im) {
  const int M = g.M;
  std::vector<double> xre(M), xim(M);
  for (int n = 0; n < M; n++) {
    double sc = (n == 0 || n == M - 1) ? 1.0 : 0.5;
    xre[n] = sc * a[n].real();
    xim[n] = sc * a[n].imag();
  }
  re.resize(M);
  im.resize(M);
  g.dct_profile(xre.data(), re.data());
  g.dct_profile(xim.data(), im.data());
}
}  // namespace

InteriorScalar interior_laplacian(const InteriorScalar& u) {
  const auto& g = u.g;
  DiskSpec s = to_spec(u);
  DiskSpec out(g);
  const int Nr = g->Nr;
  std::vector<cd> a, b, c;
  std::vector<double> d1re, d1im, d2re, d2im;
  for (int k = 0; k <= g->K; k++) {
    const cd* prof = &s.c[size_t(k + g->K) * g->Nr];
    cheb_coeffs(*g, prof, k, a);
    cheb_deriv(a, b);
    cheb_deriv(b, c);
    cheb_synth(*g, b, d1re, d1im);
    cheb_synth(*g, c, d2re, d2im);
    for (int i = 0; i < Nr; i++) {
      int j = Nr - 1 - i;
      double rr = g->r[i];
      cd up(d1re[j], d1im[j]), upp(d2re[j], d2im[j]);
      out.at(k, i) = upp + up / rr - double(k) * double(k) * prof[i] / (rr * rr);
      out.at(-k, i) = std::conj(out.at(k, i));
    }
  }
  return from_spec(out);
}

InteriorVector interior_convect(const InteriorVector& X, const InteriorVector& v) {
  InteriorVector gx = interior_gradient(X.x);
  InteriorVector gy = interior_gradient(X.y);
  InteriorVector out;
  out.x = mul_dealiased(v.x, gx.x) + mul_dealiased(v.y, gx.y);
  out.y = mul_dealiased(v.x, gy.x) + mul_dealiased(v.y, gy.y);
  return out;
}

BoundaryField interior_restrict_boundary(const InteriorScalar& u) {
  const auto& g = u.g;
  std::vector<double> ring(g->Nth);
  for (int j = 0; j < g->Nth; j++) ring[j] = u.at(g->Nr - 1, j);
  return bd_transform(g, ring);
}

BoundaryField boundary_normal_component(const InteriorVector& X) {
  const auto& g = X.x.g;
  std::vector<double> ring(g->Nth);
  for (int j = 0; j < g->Nth; j++)
    ring[j] = X.x.at(g->Nr - 1, j) * std::cos(g->theta[j]) +
              X.y.at(g->Nr - 1, j) * std::sin(g->theta[j]);
  return bd_transform(g, ring);
}

// ---- algebra ----

PadScalar pmul(const PadScalar& a, const PadScalar& b) {
  PadScalar c(a.g);
  for (size_t q = 0; q < c.v.size(); q++) c.v[q] = a.v[q] * b.v[q];
  return spec_to_pad(pad_to_spec(c));  // re-project to keep the band limit
}

PadBoundary pbmul(const PadBoundary& a, const PadBoundary& b) {
  PadBoundary c(a.g);
  for (size_t q = 0; q < c.v.size(); q++) c.v[q] = a.v[q] * b.v[q];
  return bd_to_pad(bd_from_pad(c));
}

InteriorScalar mul_dealiased(const InteriorScalar& a, const InteriorScalar& b) {
  PadScalar pa = to_pad(a), pb = to_pad(b);
  PadScalar c(a.g);
  for (size_t q = 0; q < c.v.size(); q++) c.v[q] = pa.v[q] * pb.v[q];
  return from_pad(c);
}

InteriorScalar operator+(const InteriorScalar& a, const InteriorScalar& b) {
  InteriorScalar out = a;
  for (size_t q = 0; q < out.val.size(); q++) out.val[q] += b.val[q];
  return out;
}
InteriorScalar operator-(const InteriorScalar& a, const InteriorScalar& b) {
  InteriorScalar out = a;
  for (size_t q = 0; q < out.val.size(); q++) out.val[q] -= b.val[q];
  return out;
}
InteriorScalar operator*(double s, const InteriorScalar& a) {
  InteriorScalar out = a;
  for (auto& v : out.val) v *= s;
  return out;
}
InteriorVector operator+(const InteriorVector& a, const InteriorVector& b) {
  InteriorVector out;
  out.x = a.x + b.x;
  out.y = a.y + b.y;
  return out;
}
InteriorVector operator-(const InteriorVector& a, const InteriorVector& b) {
  InteriorVector out;
  out.x = a.x - b.x;
  out.y = a.y - b.y;
  return out;
}
InteriorVector operator*(double s, const InteriorVector& a) {
  InteriorVector out;
  out.x = s * a.x;
  out.y = s * a.y;
  return out;
}

// ---- quadrature & norms ----

double integrate_disk(const InteriorScalar& u) {
  const auto& g = u.g;
  double acc = 0;
  for (int i = 0; i < g->Nr; i++) {
    double row = 0;
    for (int j = 0; j < g->Nth; j++) row += u.at(i, j);
    acc += g->wr[i] * row;
  }
  return acc * (2.0 * M_PI / g->Nth);
}

double inner_l2(const InteriorScalar& a, const InteriorScalar& b) {
  const auto& g = a.g;
  double acc = 0;
  for (int i = 0; i < g->Nr; i++) {
    double row = 0;
    for (int j = 0; j < g->Nth; j++) row += a.at(i, j) * b.at(i, j);
    acc += g->wr[i] * row;
  }
  return acc * (2.0 * M_PI / g->Nth);
}

double inner_l2(const InteriorVector& a, const InteriorVector& b) {
  return inner_l2(a.x, b.x) + inner_l2(a.y, b.y);
}

double norm_l2(const InteriorScalar& u) { return std::sqrt(std::max(0.0, inner_l2(u, u))); }
double norm_l2(const InteriorVector& u) { return std::sqrt(std::max(0.0, inner_l2(u, u))); }

double norm_linf(const InteriorScalar& u) {
  double m = 0;
  for (double v : u.val) m = std::max(m, std::abs(v));
  return m;
}
double norm_linf(const InteriorVector& u) { return std::max(norm_linf(u.x), norm_linf(u.y)); }

namespace {
// Chebyshev coefficients (degree-indexed, length M) of one signed-mode profile.
void cheb_coeffs(const Grid& g, const cd* prof, int k, std::vector<cd>& out) {
  int M = g.M, Nr = g.Nr;
  int sig = sigma_of(k);
  std::vector<double> fre(M), fim(M), tre(M), tim(M);
  for (int m = 0; m < M; m++) {
    int idx = (m < Nr) ? (Nr - 1 - m) : (m - Nr);
    double sgn = (m < Nr) ? 1.0 : double(sig);
    fre[m] = sgn * prof[idx].real();
    fim[m] = sgn * prof[idx].imag();
  }
  g.dct_profile(fre.data(), tre.data());
  g.dct_profile(fim.data(), tim.data());
  out.resize(M);
  for (int n = 0; n < M; n++) {
    double sc = 1.0 / (M - 1);
    if (n == 0 || n == M - 1) sc *= 0.5;
    out[n] = cd(tre[n] * sc, tim[n] * sc);
  }
}
}  // namespace

double interior_sobolev_norm(const InteriorScalar& u, double s) {
  const auto& g = u.g;
  DiskSpec sp = to_spec(u);
  std::vector<cd> a;
  double acc = 0;
  for (int k = 0; k <= g->K; k++) {
    cheb_coeffs(*g, &sp.c[size_t(k + g->K) * g->Nr], k, a);
    double wk = (k == 0) ? 1.0 : 2.0;
    for (int n = 0; n < g->M; n++)
      acc += wk * std::pow(1.0 + double(k) * k + double(n) * n, s) * std::norm(a[n]);
  }
  return std::sqrt(acc);
}

double interior_sobolev_norm(const InteriorVector& u, double s) {
  double ax = interior_sobolev_norm(u.x, s), ay = interior_sobolev_norm(u.y, s);
  return std::sqrt(ax * ax + ay * ay);
}

// ---- constructors ----

InteriorScalar interior_zero(GridPtr g) { return InteriorScalar(std::move(g)); }
InteriorVector interior_zero_vec(GridPtr g) { return InteriorVector(std::move(g)); }
InteriorScalar interior_constant(GridPtr g, double c) {
  InteriorScalar u(std::move(g));
  std::fill(u.val.begin(), u.val.end(), c);
  return u;
}

// ---- off-node evaluation ----

ModeCheb make_eval(const DiskSpec& s) {
  const auto& g = s.g;
  ModeCheb mc;
  mc.g = g;
  mc.a.assign(size_t(g->K + 1) * g->Nr, cd(0, 0));
  std::vector<cd> a;
  for (int k = 0; k <= g->K; k++) {
    cheb_coeffs(*g, &s.c[size_t(k + g->K) * g->Nr], k, a);
    // parity packing: even k keeps degrees 2m, odd k keeps degrees 2m+1
    for (int m = 0; m < g->Nr; m++) {
      int n = (sigma_of(k) > 0) ? 2 * m : 2 * m + 1;
      if (n < g->M) mc.a[size_t(k) * g->Nr + m] = a[n];
    }
  }
  return mc;
}

ModeCheb make_eval(const InteriorScalar& u) { return make_eval(to_spec(u)); }

double eval_at(const ModeCheb& mc, double rr, double th) {
  const auto& g = mc.g;
  int Nr = g->Nr;
  double y = 2.0 * rr * rr - 1.0;
  double acc = 0;
  double ck = 1.0, sk = 0.0;                   // cos(k th), sin(k th)
  const double c1 = std::cos(th), s1 = std::sin(th);
  for (int k = 0; k <= g->K; k++) {
    const cd* b = &mc.a[size_t(k) * Nr];
    // Clenshaw in y for both parity bases (recurrence phi_{m+1} = 2y phi_m - phi_{m-1})
    cd s0(0, 0), s1c(0, 0);
    for (int m = Nr - 1; m >= 0; m--) {
      cd sm = b[m] + 2.0 * y * s0 - s1c;
      s1c = s0;
      s0 = sm;
    }
    cd val;
    if (k % 2 == 0)
      val = s0 - y * s1c;         // T-basis: T_{2m}(r) = T_m(y)
    else
      val = rr * (s0 - s1c);      // V-basis: T_{2m+1}(r) = r V_m(y)
    double wk = (k == 0) ? 1.0 : 2.0;
    acc += wk * (val.real() * ck - val.imag() * sk);
    double cn = ck * c1 - sk * s1;  // advance e^{ik th}
    sk = sk * c1 + ck * s1;
    ck = cn;
  }
  return acc;
}

}  // namespace df
