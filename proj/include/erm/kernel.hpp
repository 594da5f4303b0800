#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erm/quadrature.hpp"

namespace erm {

// Kernels for the two matrix models and their Fourier analysis.
//
// PeriodicKernel is a 1-periodic function F on the torus, evaluated at the
// canonical representative of its argument, with discrete Fourier
// coefficients  Fhat(k) = \int_Omega F(x) e^{-2 i pi k.x} dx.
//
// CompactKernel is a function f supported inside Omega, with the full-space
// transform  fhat(xi) = \int_{R^d} f(x) e^{-2 i pi xi.x} dx  and the
// convolution powers f^{*m}(0) that drive the high-density expansions.
//
// Indicator kernels use the closed condition |x| <= r.  The boundary has
// measure zero, so no integral changes; fixing it keeps evaluation
// bit-reproducible.

using Complex = std::complex<double>;

enum class KernelFamily { BoxIndicator, BallIndicator, FourierSeries, PureMode, Custom };

using KernelFn = std::function<Complex(const Eigen::VectorXd&)>;
using LatticeFn = std::function<Complex(const Eigen::VectorXi&)>;

struct FourierValue {
  Complex value{0.0, 0.0};
  double error = 0.0;  // quadrature estimate; 0 for analytic routes
  bool exact = false;
};

class PeriodicKernel {
 public:
  static PeriodicKernel box(int d, double r);
  static PeriodicKernel ball(int d, double r);
  static PeriodicKernel fourier_series(
      int d, const std::map<std::vector<int>, Complex>& coeffs);
  static PeriodicKernel pure_mode(const Eigen::VectorXi& k);
  // hermitian / real_valued are caller claims; both are spot-checked on a
  // seeded sample of points at construction and rejected if violated.
  static PeriodicKernel custom(int d, KernelFn eval, bool hermitian,
                               bool real_valued,
                               std::optional<LatticeFn> fourier = std::nullopt);

  Complex operator()(const Eigen::VectorXd& x) const;
  // Fast path for matrix assembly; requires real_valued().
  double real_at(const double* x) const;

  KernelFamily family() const { return family_; }
  int dim() const { return d_; }
  bool hermitian() const { return hermitian_; }
  bool real_valued() const { return real_valued_; }
  double radius() const { return radius_; }
  double value_at_zero_real() const;
  const std::string& id() const { return id_; }
  const std::vector<std::pair<Eigen::VectorXi, Complex>>& series_terms() const {
    return series_;
  }
  const Eigen::VectorXi& mode() const { return mode_; }

 private:
  PeriodicKernel() = default;
  KernelFamily family_ = KernelFamily::Custom;
  int d_ = 0;
  double radius_ = 0.0;
  std::vector<std::pair<Eigen::VectorXi, Complex>> series_;
  Eigen::VectorXi mode_;
  KernelFn custom_;
  std::optional<LatticeFn> custom_fourier_;
  bool hermitian_ = false;
  bool real_valued_ = false;
  std::string id_;
  friend FourierValue fourier_coefficient(const PeriodicKernel&,
                                          const Eigen::VectorXi&,
                                          const QuadratureSpec&);
};

class CompactKernel {
 public:
  static CompactKernel box(int d, double r);
  static CompactKernel ball(int d, double r);
  // support_radius: smallest R with support in [-R, R]^d (must be <= 1/2).
  // Values of eval outside that cube are clamped to zero.  sup_abs defaults
  // to a grid scan over the support when not supplied.
  static CompactKernel custom(int d, KernelFn eval, bool hermitian,
                              bool real_valued, double support_radius,
                              std::optional<KernelFn> fourier = std::nullopt,
                              std::optional<double> sup_abs = std::nullopt);

  Complex operator()(const Eigen::VectorXd& x) const;
  double real_at(const double* x) const;

  KernelFamily family() const { return family_; }
  int dim() const { return d_; }
  bool hermitian() const { return hermitian_; }
  bool real_valued() const { return real_valued_; }
  double radius() const { return radius_; }
  double support_radius() const { return support_radius_; }
  double sup_abs() const { return sup_abs_; }
  double value_at_zero_real() const;
  const std::string& id() const { return id_; }

 private:
  CompactKernel() = default;
  KernelFamily family_ = KernelFamily::Custom;
  int d_ = 0;
  double radius_ = 0.0;
  double support_radius_ = 0.0;
  double sup_abs_ = 0.0;
  KernelFn custom_;
  std::optional<KernelFn> custom_fourier_;
  bool hermitian_ = false;
  bool real_valued_ = false;
  std::string id_;
  friend FourierValue fourier_transform(const CompactKernel&,
                                        const Eigen::VectorXd&,
                                        const QuadratureSpec&);
};

// Discrete coefficient Fhat(k).  Analytic for BoxIndicator, FourierSeries,
// PureMode, and Custom kernels that supply a coefficient function;
// tensor-midpoint quadrature over Omega otherwise (error from Richardson
// halving).
FourierValue fourier_coefficient(const PeriodicKernel& F,
                                 const Eigen::VectorXi& k,
                                 const QuadratureSpec& spec = {});

// Full-space transform fhat(xi); analytic for BoxIndicator, quadrature over
// the support cube otherwise.
FourierValue fourier_transform(const CompactKernel& f,
                               const Eigen::VectorXd& xi,
                               const QuadratureSpec& spec = {});

// \int_Omega |F|^2.  Analytic for every family except Custom.
struct NormValue {
  double value = 0.0;
  double error = 0.0;
};
NormValue kernel_l2_norm_sq(const PeriodicKernel& F,
                            const QuadratureSpec& spec = {});

// ---- convolution powers ------------------------------------------------

struct ConvolutionOptions {
  int grid_nodes_1d = 8192;  // lattice nodes for the iterated convolution
  int grid_nodes_2d = 256;
  int grid_nodes_3d = 48;
  double xi_step = 0.02;        // fourier-route grid step per axis
  double xi_cutoff_m1 = 2000.0; // m = 1 needs a long oscillatory tail
  double xi_cutoff = 400.0;     // m >= 2: integrand decays like |xi|^-m
  double agreement_tol = 0.02;  // relative discrepancy that triggers warning

  int grid_nodes_for(int d) const {
    return d <= 1 ? grid_nodes_1d : (d == 2 ? grid_nodes_2d : grid_nodes_3d);
  }
};

struct ConvolutionPower {
  double value = 0.0;          // analytic when available, else grid route
  double grid_route = 0.0;     // iterated lattice convolution
  double fourier_route = 0.0;  // \int fhat(xi)^m dxi on a truncated grid
  double discrepancy = 0.0;    // |grid - fourier|
  bool analytic = false;
  std::string warning;  // non-empty when the routes disagree beyond tolerance
};

// f^{*m}(0) computed along two independent routes (plus a closed form for
// box kernels, which factorizes across axes into the central value of the
// Irwin-Hall density).
ConvolutionPower convolution_power_at_zero(const CompactKernel& f, int m,
                                           const ConvolutionOptions& opts = {});

// ---- level-set density -------------------------------------------------

struct LevelSetOptions {
  double eps0 = 1e-3;      // values in (-eps0, eps0) are excluded
  double xi_cutoff = 0.0;  // 0 = scan for the radius beyond which |fhat| < eps0
  double grid_step = 0.01;
  int bins_per_side = 20000;
};

struct LevelSetDensity {
  std::vector<double> bin_lo;
  std::vector<double> bin_hi;
  std::vector<double> mass;  // Lebesgue volume of the level set per bin
  double eps0 = 0.0;
  double xi_cutoff = 0.0;
  double grid_step = 0.0;
  int dim = 0;

  double total_mass() const;
};

// Histogram of fhat values over the xi-grid, each cell contributing its
// volume; values inside (-eps0, eps0) are discarded.
LevelSetDensity level_set_density(const CompactKernel& f,
                                  const LevelSetOptions& opts = {});

// \int t^m psi(t) dt from the histogram (bin centers).
double level_set_moment(const LevelSetDensity& density, int m);

// Smallest radius beyond which |fhat| stays below eps0 along the axes,
// found by outward scanning, padded by 5%.
double suggest_xi_cutoff(const CompactKernel& f, double eps0);

}  // namespace erm
