// Spectral substrate on the unit disk: Fourier modes in theta crossed with
// parity-folded Chebyshev collocation in r (no node at r=0), plus boundary
// fields on the unit circle.  All transforms are FFTW with deterministic
// (ESTIMATE) planning; products of fields use a 3/2-padded theta grid.
#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace df {

using cd = std::complex<double>;

// Error taxonomy; kind maps to the process exit code.
enum class ErrKind { validation = 1, blowup = 2, acceptance = 3 };

struct SimError : std::runtime_error {
  ErrKind kind;
  SimError(ErrKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

// Function on the unit circle, Hermitian Fourier coefficients c[k], k=0..K:
// u(theta) = c0 + 2 sum_{k>=1} Re(c_k e^{ik theta}).
struct BoundaryField {
  GridPtr g;
  std::vector<cd> c;
  BoundaryField() = default;
  explicit BoundaryField(GridPtr gr);
  cd& operator[](int k) { return c[k]; }
  cd operator[](int k) const { return c[k]; }
};

// Real scalar field on the tensor grid, val[i*Nth + j] = u(r_i, theta_j).
struct InteriorScalar {
  GridPtr g;
  std::vector<double> val;
  int gstride = 0;  // = Nth
  InteriorScalar() = default;
  explicit InteriorScalar(GridPtr gr);
  double& at(int i, int j) { return val[size_t(i) * gstride + j]; }
  double at(int i, int j) const { return val[size_t(i) * gstride + j]; }
};

struct InteriorVector {
  InteriorScalar x, y;
  InteriorVector() = default;
  explicit InteriorVector(GridPtr gr) : x(gr), y(gr) {}
};

// Full signed spectrum of an interior field: c[(k+K)*Nr + i], k in [-K, K],
// Hermitian (c_{-k} = conj(c_k)) for real fields.
struct DiskSpec {
  GridPtr g;
  std::vector<cd> c;
  DiskSpec() = default;
  explicit DiskSpec(GridPtr gr);
  cd& at(int k, int i);
  cd at(int k, int i) const;
};

// Physical values on the dealiasing grid, v[i*Npad + j]; band-limited to K
// by construction (every producer re-projects).
struct PadScalar {
  GridPtr g;
  std::vector<double> v;
  PadScalar() = default;
  explicit PadScalar(GridPtr gr);
};

// Boundary values on the padded circle grid, band-limited to K.
struct PadBoundary {
  GridPtr g;
  std::vector<double> v;
  PadBoundary() = default;
  explicit PadBoundary(GridPtr gr);
};

// Per-mode parity-packed Chebyshev coefficients for off-node evaluation:
// a[k*Nr + m] is the m-th packed coefficient of Hermitian mode k.
struct ModeCheb {
  GridPtr g;
  std::vector<cd> a;
};

class Grid : public std::enable_shared_from_this<Grid> {
 public:
  static GridPtr make(int K, int Nr);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int K = 0;      // highest retained Fourier mode
  int Nth = 0;    // 2K+2 theta nodes
  int Nr = 0;     // radial nodes in (0, 1]
  int M = 0;      // 2*Nr, underlying Chebyshev-Lobatto grid size
  int Npad = 0;   // padded theta grid (>= 3K+2, even)
  std::vector<double> theta;   // Nth
  std::vector<double> thpad;   // Npad
  std::vector<double> r;       // ascending, r[Nr-1] = 1
  std::vector<double> wr;      // int_0^1 u(r) r dr = sum wr_i u(r_i) (even parity)
  Eigen::MatrixXd D1e, D1o, D2e, D2o;  // folded radial derivative matrices

  const Eigen::MatrixXd& mode_lap(int k) const;  // flat Laplacian rows for |k|
  const Eigen::PartialPivLU<Eigen::MatrixXd>& lu_dirichlet(int k) const;
  const Eigen::PartialPivLU<Eigen::MatrixXd>& lu_neumann(int k) const;  // k >= 1
  const Eigen::PartialPivLU<Eigen::MatrixXd>& lu_neumann0() const;      // bordered, k = 0

  // FFT helpers (thread-safe: new-array execution on caller buffers).
  void fft_rows(const double* in, cd* out, int n, int rows) const;   // analysis, 1/n scaled
  void ifft_rows(const cd* in, double* out, int n, int rows) const;  // synthesis
  void dct_profile(const double* in, double* out) const;             // REDFT00 length M

 private:
  Grid() = default;
  void build(int K_, int Nr_);
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::vector<Eigen::MatrixXd> mlap_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> luD_, luN_;
  Eigen::PartialPivLU<Eigen::MatrixXd> luN0_;
};

// ---- boundary transforms & operators ----
BoundaryField bd_transform(GridPtr g, const std::vector<double>& samples);
std::vector<double> bd_inverse(const BoundaryField& f);
BoundaryField bd_derivative(const BoundaryField& f, int order);
double sobolev_norm_boundary(const BoundaryField& f, double s);
BoundaryField dirichlet_to_neumann_disk(const BoundaryField& h);
PadBoundary bd_to_pad(const BoundaryField& f);
BoundaryField bd_from_pad(const PadBoundary& p);  // projects to modes <= K
BoundaryField bd_zero(GridPtr g);
double bd_mean(const BoundaryField& f);
BoundaryField bd_mean_free(const BoundaryField& f);

BoundaryField operator+(const BoundaryField& a, const BoundaryField& b);
BoundaryField operator-(const BoundaryField& a, const BoundaryField& b);
BoundaryField operator*(double s, const BoundaryField& a);

// ---- interior transforms ----
DiskSpec to_spec(const InteriorScalar& u);
InteriorScalar from_spec(const DiskSpec& s);
PadScalar spec_to_pad(const DiskSpec& s);
DiskSpec pad_to_spec(const PadScalar& p);  // truncates to K
PadScalar to_pad(const InteriorScalar& u);
InteriorScalar from_pad(const PadScalar& p);

// ---- derivatives (spectral in theta, collocation in r) ----
DiskSpec d_theta(const DiskSpec& s);
DiskSpec d_r(const DiskSpec& s);
DiskSpec d_x(const DiskSpec& s);
DiskSpec d_y(const DiskSpec& s);
InteriorVector interior_gradient(const InteriorScalar& u);
InteriorScalar interior_divergence(const InteriorVector& X);
InteriorScalar interior_curl2d(const InteriorVector& X);
InteriorScalar interior_laplacian(const InteriorScalar& u);
// (v . grad) X componentwise, dealiased products.
InteriorVector interior_convect(const InteriorVector& X, const InteriorVector& v);
BoundaryField interior_restrict_boundary(const InteriorScalar& u);
BoundaryField boundary_normal_component(const InteriorVector& X);  // <X, e_r> at r=1

// ---- algebra ----
PadScalar pmul(const PadScalar& a, const PadScalar& b);      // dealiased product
PadBoundary pbmul(const PadBoundary& a, const PadBoundary& b);
InteriorScalar mul_dealiased(const InteriorScalar& a, const InteriorScalar& b);

InteriorScalar operator+(const InteriorScalar& a, const InteriorScalar& b);
InteriorScalar operator-(const InteriorScalar& a, const InteriorScalar& b);
InteriorScalar operator*(double s, const InteriorScalar& a);
InteriorVector operator+(const InteriorVector& a, const InteriorVector& b);
InteriorVector operator-(const InteriorVector& a, const InteriorVector& b);
InteriorVector operator*(double s, const InteriorVector& a);

// ---- quadrature & norms ----
double integrate_disk(const InteriorScalar& u);
double inner_l2(const InteriorScalar& a, const InteriorScalar& b);
double inner_l2(const InteriorVector& a, const InteriorVector& b);
double norm_l2(const InteriorScalar& u);
double norm_l2(const InteriorVector& u);
double norm_linf(const InteriorScalar& u);
double norm_linf(const InteriorVector& u);
// Discrete H^s stand-in: sqrt(sum_{k,n} (1+k^2+n^2)^s |a_{k,n}|^2) over the
// Fourier x Chebyshev coefficient table.
double interior_sobolev_norm(const InteriorScalar& u, double s);
double interior_sobolev_norm(const InteriorVector& u, double s);

// ---- field constructors ----
InteriorScalar interior_zero(GridPtr g);
InteriorVector interior_zero_vec(GridPtr g);
InteriorScalar interior_constant(GridPtr g, double c);

// ---- off-node evaluation (r in [0,1], any theta) ----
ModeCheb make_eval(const InteriorScalar& u);
ModeCheb make_eval(const DiskSpec& s);
double eval_at(const ModeCheb& mc, double rr, double th);

template <class F>
InteriorScalar interior_from_fn(GridPtr g, F fn) {
  InteriorScalar u(g);
  for (int i = 0; i < g->Nr; i++)
    for (int j = 0; j < g->Nth; j++) {
      double x = g->r[i] * std::cos(g->theta[j]);
      double y = g->r[i] * std::sin(g->theta[j]);
      u.at(i, j) = fn(x, y);
    }
  return u;
}

}  // namespace df
