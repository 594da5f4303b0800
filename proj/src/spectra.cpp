#include "erm/spectra.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace erm {

namespace {

std::string provenance_line(const Provenance& p) {
  return p.builder + "[" + p.kernel_id + ", " + p.model_tag +
         ", n=" + std::to_string(p.n) + ", seed=" + std::to_string(p.seed) +
         "]";
}

// Identity and residual tolerances sit well above solver roundoff
// (~ n * eps relative) but far below anything a real defect would produce.
double identity_tol(int n, double scale) {
  return 1e-10 * static_cast<double>(n) * std::max(1.0, scale);
}

void check_identities(const HermitianMatrix& H, const Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(lambda.size());
  const double frob_sq = H.frobenius_sq();
  const double frob = std::sqrt(frob_sq);
  double trace_err = std::abs(lambda.sum() - H.trace_real());
  if (trace_err > identity_tol(n, frob))
    throw std::runtime_error("eigenvalues: trace identity violated by " +
                             std::to_string(trace_err) + " for " +
                             provenance_line(H.provenance));
  double frob_err = std::abs(lambda.squaredNorm() - frob_sq);
  if (frob_err > identity_tol(n, frob_sq))
    throw std::runtime_error(
        "eigenvalues: Frobenius identity violated by " +
        std::to_string(frob_err) + " for " + provenance_line(H.provenance));
}

template <typename Matrix>
Eigen::VectorXd solve(const Matrix& m, bool verify_extremes,
                      const Provenance& prov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.compute(m, verify_extremes ? Eigen::ComputeEigenvectors
                                : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalues: solver failed to converge for " +
                             provenance_line(prov));
  Eigen::VectorXd lambda = es.eigenvalues();
  if (verify_extremes) {
    const int n = static_cast<int>(lambda.size());
    const double tol = identity_tol(n, m.norm());
    for (int i : {0, n - 1}) {
      auto v = es.eigenvectors().col(i);
      double resid = (m * v - lambda[i] * v).norm();
      if (resid > tol)
        throw std::runtime_error(
            "eigenvalues: extreme-pair residual " + std::to_string(resid) +
            " exceeds tolerance for " + provenance_line(prov));
    }
  }
  return lambda;
}

}  // namespace

SpectralSample eigenvalues(const HermitianMatrix& H, Normalization tag,
                           bool verify_extremes) {
  if (!H.hermitian)
    throw std::invalid_argument(
        "eigenvalues: matrix is not hermitian (kernel was not hermitian); "
        "no real spectrum to compute");
  if (H.order() < 1) throw std::invalid_argument("eigenvalues: empty matrix");
  SpectralSample s;
  s.normalization = tag;
  s.provenance = H.provenance;
  s.eigenvalues = H.is_real()
                      ? solve(H.real(), verify_extremes, H.provenance)
                      : solve(H.cplx(), verify_extremes, H.provenance);
  check_identities(H, s.eigenvalues);
  return s;
}

EmpiricalMeasure empirical_measure(const SpectralSample& s) {
  const int n = s.n();
  EmpiricalMeasure mu;
  if (s.normalization == Normalization::DividedByN) {
    mu.locations = s.eigenvalues / static_cast<double>(n);
    mu.weights = Eigen::VectorXd::Ones(n);
    mu.total_mass = static_cast<double>(n);
  } else {
    mu.locations = s.eigenvalues;
    mu.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    mu.total_mass = 1.0;
  }
  return mu;
}

double measure_count(const EmpiricalMeasure& mu, double lo, double hi) {
  if (!(lo < hi))
    throw std::invalid_argument("measure_count: need lo < hi");
  double mass = 0.0;
  for (int i = 0; i < mu.locations.size(); ++i)
    if (mu.locations[i] >= lo && mu.locations[i] < hi) mass += mu.weights[i];
  return mass;
}

double measure_moment(const EmpiricalMeasure& mu, int m) {
  if (m < 1) throw std::invalid_argument("measure_moment: need m >= 1");
  double acc = 0.0;
  for (int i = 0; i < mu.locations.size(); ++i)
    acc += mu.weights[i] * std::pow(mu.locations[i], m);
  return acc;
}

namespace {

double norm_factor(const SpectralSample& s) {
  return s.normalization == Normalization::DividedByN
             ? 1.0 / static_cast<double>(s.n())
             : 1.0;
}

}  // namespace

double spectral_radius(const SpectralSample& s) {
  if (s.n() < 1) throw std::invalid_argument("spectral_radius: empty sample");
  double lo = std::abs(s.eigenvalues[0]);
  double hi = std::abs(s.eigenvalues[s.n() - 1]);
  return std::max(lo, hi) * norm_factor(s);
}

double spectral_gap(const SpectralSample& s) {
  if (s.n() < 2) throw std::invalid_argument("spectral_gap: need n >= 2");
  const int n = s.n();
  return (s.eigenvalues[n - 1] - s.eigenvalues[n - 2]) * norm_factor(s);
}

double eigenvector_residual(const PeriodicKernel& F, const PointSet& pts,
                            const Eigen::VectorXi& k, double p) {
  if (!F.hermitian())
    throw std::invalid_argument(
        "eigenvector_residual: kernel must be hermitian");
  if (pts.model != Model::Torus)
    throw std::invalid_argument(
        "eigenvector_residual: needs a torus point set");
  if (F.dim() != pts.dim() || k.size() != pts.dim())
    throw std::invalid_argument(
        "eigenvector_residual: dimension mismatch between kernel, points, "
        "and mode");
  if (!(p >= 2.0))
    throw std::invalid_argument("eigenvector_residual: need p >= 2");

  const int n = pts.n();
  const int d = pts.dim();
  const Complex target = fourier_coefficient(F, k).value;
  const bool zero_mode = (k.array() == 0).all();
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

  Eigen::VectorXd w(d);
  std::vector<double> abs_resid(n);
  for (int i = 0; i < n; ++i) {
    Complex s(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < d; ++a)
        w[a] = wrap_unit(pts.coords(a, i) - pts.coords(a, j));
      Complex fv = F(w);
      if (zero_mode) {
        s += fv;
      } else {
        double phase = 0.0;
        for (int a = 0; a < d; ++a) phase += k[a] * w[a];
        phase *= -kTwoPi;
        s += fv * Complex(std::cos(phase), std::sin(phase));
      }
    }
    s /= static_cast<double>(n);
    abs_resid[i] = std::abs(s - target);
  }

  if (std::isinf(p)) {
    double m = 0.0;
    for (double r : abs_resid) m = std::max(m, r);
    return m;
  }
  if (p == 2.0) {
    double acc = 0.0;
    for (double r : abs_resid) acc += r * r;
    return std::sqrt(acc);
  }
  double acc = 0.0;
  for (double r : abs_resid) acc += std::pow(r, p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace erm
