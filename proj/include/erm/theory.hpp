#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "erm/kernel.hpp"
#include "erm/quadrature.hpp"

namespace erm {

// Closed-form and quadrature evaluation of the predicted quantities that the
// empirical side is compared against: the atomic limit measure and its
// moments, the order-1/n moment correction, density-gamma moments via
// surjection classes, high-density asymptotics, the Poisson degree bound,
// and determinant correlation functionals.

// ---- atomic limit measure -------------------------------------------------

// The limit spectrum of the 1/n-scaled fixed-kernel matrix: one atom per
// lattice mode, located at the Fourier coefficient.  Truncated to
// ||k||_inf <= cutoff; tail_bound is the Parseval mass left outside,
// max(0, ||F||_2^2 - sum of atom^2).
struct AtomicMeasure {
  Eigen::MatrixXi modes;     // d x count, every ||k||_inf <= cutoff
  Eigen::VectorXd values;    // coefficient at the matching column
  int cutoff = 0;
  double tail_bound = 0.0;
};

AtomicMeasure limit_measure(const PeriodicKernel& F, int cutoff);

// ---- moment reports --------------------------------------------------------

enum class MomentMethod { ClosedForm, SurjectionQuadrature, HighDensityAsymptotic };

struct MomentReport {
  int m = 0;
  double value = 0.0;
  MomentMethod method = MomentMethod::ClosedForm;
  double error_estimate = 0.0;
  // SurjectionQuadrature only: contribution of each block p = 1..m,
  // gamma-power factors included, summing to value.
  std::vector<double> breakdown;
  std::string warning;
};

// sum of atom^m over ||k||_inf <= cutoff.  For m = 1 the coefficient series
// is only conditionally convergent for indicator kernels; slow decay at the
// cutoff is detected by comparing dyadic shell-block sums and reported in
// the warning field.
MomentReport mu_moment(const PeriodicKernel& F, int m, int cutoff);
MomentReport mu_moment(const AtomicMeasure& mu, int m);

// sum_{q=1}^{m-1} q * mu(P_q) mu(P_{m-q})  -  (m(m-1)/2) * mu(P_m),
// the coefficient of 1/n in the expected moment of the unnormalized
// measure.  m >= 2.
double finite_size_correction(const PeriodicKernel& F, int m, int cutoff);

// ---- density-gamma moments -------------------------------------------------

// Moments of the limit law of the scaled model at density gamma:
//   value = sum_{p=1}^m gamma^(p-1) * sum over canonical surjection classes
//           of the chain integral of the class representative,
// with the p = 1 block equal to f(0)^m.  Each class integral runs over the
// bounded box [-(m-1)R, (m-1)R]^{d(p-1)} (R the support radius; one chain
// coordinate is pinned at the origin): a nonzero integrand needs every chain
// step inside the support.  Blocks of total dimension <= 3 use tensor-grid
// midpoint quadrature, higher dimensions a shifted low-discrepancy sequence;
// error estimates accumulate into error_estimate.  Caps at m <= 8; the
// kernel must be hermitian.
constexpr int kMomentCap = 8;

MomentReport nu_gamma_moment(const CompactKernel& f, double gamma, int m,
                             const QuadratureSpec& spec = {});

// Leading high-density behaviour gamma^(m-1) * f^(*m)(0).
double high_density_moment(const CompactKernel& f, double gamma, int m,
                           const ConvolutionOptions& opts = {});

// Next-order coefficient: gamma^(m-2) * sum_{p=1}^{m-1} p f^(*p)(0) f^(*(m-p))(0).
double second_order_term(const CompactKernel& f, double gamma, int m,
                         const ConvolutionOptions& opts = {});

// ---- Poisson degree bound ---------------------------------------------------

// The unique j with  n P(Po(gamma) >= j+1) <= 1 < n P(Po(gamma) >= j).
// Tails are summed exactly in extended precision, away from the mode, so the
// result is reliable for n up to 1e9.  degenerate marks the n = 1 corner
// where no j satisfies the left strict inequality.  Both inequalities are
// re-verified on every call before returning.
struct PoissonBound {
  int j = 0;
  bool degenerate = false;
  double tail_at_j = 0.0;       // P(Po(gamma) >= j)
  double tail_above_j = 0.0;    // P(Po(gamma) >= j+1)
};

PoissonBound poisson_bound_j(std::int64_t n, double gamma);

// P(Po(gamma) >= j), exact summation.
double poisson_upper_tail(int j, double gamma);

// ---- correlation functionals ------------------------------------------------

// -integral of F^2 over the unit cell: the two-point determinant
// correlation.  Real-valued kernels only.
double correlation_M2(const PeriodicKernel& F,
                      const QuadratureSpec& spec = {});

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::int64_t samples = 0;
};

// Monte Carlo estimate of the integral over m independent uniform points of
// det(centered m-point matrix)^k, where the matrix has entries
// F(U_a - U_b) off the diagonal and zeros on it.  k = 1 gives the m-point
// determinant correlation.  Hermitian kernels only (the determinant is then
// real); the estimate is deterministic in the seed.
McEstimate correlation_Mm_mc(const PeriodicKernel& F, int m, int k,
                             std::int64_t samples, std::uint64_t seed);

}  // namespace erm
