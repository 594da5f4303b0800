#include "erm/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "erm/combinatorics.hpp"
#include "erm/common.hpp"

namespace erm {

// ---- atomic limit measure ---------------------------------------------------

AtomicMeasure limit_measure(const PeriodicKernel& F, int cutoff) {
  if (cutoff < 0)
    throw std::invalid_argument("limit_measure: cutoff must be >= 0");
  if (!F.hermitian())
    throw std::invalid_argument(
        "limit_measure: atoms are only real for hermitian kernels");
  const int d = F.dim();
  const int side = 2 * cutoff + 1;
  std::int64_t count = 1;
  for (int a = 0; a < d; ++a) count *= side;
  if (count > 2'000'000)
    throw std::invalid_argument("limit_measure: lattice block too large");

  AtomicMeasure mu;
  mu.cutoff = cutoff;
  mu.modes.resize(d, static_cast<int>(count));
  mu.values.resize(count);

  Eigen::VectorXi k = Eigen::VectorXi::Constant(d, -cutoff);
  double sq_sum = 0.0;
  for (std::int64_t idx = 0; idx < count; ++idx) {
    mu.modes.col(idx) = k;
    double v = fourier_coefficient(F, k).value.real();
    mu.values[idx] = v;
    sq_sum += v * v;
    for (int a = 0; a < d; ++a) {
      if (++k[a] <= cutoff) break;
      k[a] = -cutoff;
    }
  }
  mu.tail_bound = std::max(0.0, kernel_l2_norm_sq(F).value - sq_sum);
  return mu;
}

// ---- mu moments -------------------------------------------------------------

namespace {

int mode_norm_inf(const Eigen::MatrixXi& modes, int col) {
  int m = 0;
  for (int a = 0; a < modes.rows(); ++a)
    m = std::max(m, std::abs(modes(a, col)));
  return m;
}

}  // namespace

MomentReport mu_moment(const AtomicMeasure& mu, int m) {
  if (m < 1) throw std::invalid_argument("mu_moment: need m >= 1");
  MomentReport r;
  r.m = m;
  r.method = MomentMethod::ClosedForm;

  double value = 0.0;
  double shell_max = 0.0;
  const int K = mu.cutoff;
  // dyadic blocks of the absolute series, for the m = 1 decay check
  double block_outer = 0.0, block_inner = 0.0;
  for (int i = 0; i < mu.values.size(); ++i) {
    const double v = mu.values[i];
    value += std::pow(v, m);
    const int nk = mode_norm_inf(mu.modes, i);
    if (nk == K) shell_max = std::max(shell_max, std::abs(v));
    if (2 * nk > K)
      block_outer += std::abs(v);
    else if (4 * nk > K)
      block_inner += std::abs(v);
  }
  r.value = value;

  if (m == 1) {
    r.error_estimate = block_outer;
    if (K >= 4 && block_outer > 1e-12 && block_outer >= 0.6 * block_inner)
      r.warning =
          "coefficient blocks are not decaying at this cutoff; the plain sum "
          "converges slowly if at all, treat the value as a partial sum";
  } else {
    r.error_estimate = mu.tail_bound * std::pow(shell_max, m - 2);
  }
  return r;
}

MomentReport mu_moment(const PeriodicKernel& F, int m, int cutoff) {
  return mu_moment(limit_measure(F, cutoff), m);
}

double finite_size_correction(const PeriodicKernel& F, int m, int cutoff) {
  if (m < 2)
    throw std::invalid_argument("finite_size_correction: need m >= 2");
  AtomicMeasure mu = limit_measure(F, cutoff);
  std::vector<double> mom(m + 1, 0.0);
  for (int q = 1; q <= m; ++q) mom[q] = mu_moment(mu, q).value;
  double acc = 0.0;
  for (int q = 1; q <= m - 1; ++q) acc += q * mom[q] * mom[m - q];
  return acc - 0.5 * m * (m - 1) * mom[m];
}

// ---- density-gamma moments ----------------------------------------------------

namespace {

// Product over the chain steps of the class representative, with one
// coordinate pinned at the origin.  x packs the remaining p-1 points.
class ChainProduct {
 public:
  ChainProduct(const CompactKernel& f, const std::vector<int>& rep, int d)
      : f_(f), rep_(rep), m_(static_cast<int>(rep.size())), d_(d), diff_(d) {}

  double real(const double* x) const {
    double prod = 1.0;
    for (int j = 0; j < m_; ++j) {
      load_diff(x, j);
      prod *= f_.real_at(diff_.data());
      if (prod == 0.0) return 0.0;
    }
    return prod;
  }

  Complex cplx(const double* x) const {
    Complex prod(1.0, 0.0);
    Eigen::VectorXd arg(d_);
    for (int j = 0; j < m_; ++j) {
      load_diff(x, j);
      for (int t = 0; t < d_; ++t) arg[t] = diff_[t];
      prod *= f_(arg);
      if (prod == Complex(0.0, 0.0)) return prod;
    }
    return prod;
  }

 private:
  void load_diff(const double* x, int j) const {
    const int a = rep_[j];
    const int b = rep_[(j + 1) % m_];
    for (int t = 0; t < d_; ++t) {
      const double ya = a == 0 ? 0.0 : x[(a - 1) * d_ + t];
      const double yb = b == 0 ? 0.0 : x[(b - 1) * d_ + t];
      diff_[t] = ya - yb;
    }
  }

  const CompactKernel& f_;
  const std::vector<int>& rep_;
  int m_, d_;
  mutable std::vector<double> diff_;
};

Estimate integrate_chain(const CompactKernel& f, const SurjectionClass& cls,
                         double half_width, const QuadratureSpec& spec,
                         std::uint64_t stream, double* imag_leak) {
  const int d = f.dim();
  const int dim = (cls.p - 1) * d;
  ChainProduct chain(f, cls.representative, d);

  if (f.real_valued()) {
    Integrand g = [&chain](const double* x) { return chain.real(x); };
    if (spec.use_grid(dim))
      return midpoint_integrate(dim, spec.nodes_for(dim), half_width, g);
    return qmc_integrate(dim, spec.qmc_samples, spec.qmc_shifts,
                         derive_seed(spec.qmc_seed, stream), half_width, g);
  }

  Integrand re = [&chain](const double* x) { return chain.cplx(x).real(); };
  Integrand im = [&chain](const double* x) { return chain.cplx(x).imag(); };
  Estimate er, ei;
  if (spec.use_grid(dim)) {
    er = midpoint_integrate(dim, spec.nodes_for(dim), half_width, re);
    ei = midpoint_integrate(dim, spec.nodes_for(dim), half_width, im);
  } else {
    const std::uint64_t seed = derive_seed(spec.qmc_seed, stream);
    er = qmc_integrate(dim, spec.qmc_samples, spec.qmc_shifts, seed,
                       half_width, re);
    ei = qmc_integrate(dim, spec.qmc_samples, spec.qmc_shifts, seed,
                       half_width, im);
  }
  *imag_leak += std::abs(ei.value);
  return {er.value, er.error + ei.error};
}

}  // namespace

MomentReport nu_gamma_moment(const CompactKernel& f, double gamma, int m,
                             const QuadratureSpec& spec) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("nu_gamma_moment: gamma must be > 0");
  if (m < 1) throw std::invalid_argument("nu_gamma_moment: need m >= 1");
  if (m > kMomentCap)
    throw std::invalid_argument("nu_gamma_moment: m exceeds the cap " +
                                std::to_string(kMomentCap));
  if (!f.hermitian())
    throw std::invalid_argument(
        "nu_gamma_moment: moments of a real spectrum need a hermitian "
        "kernel");

  MomentReport r;
  r.m = m;
  r.method = MomentMethod::SurjectionQuadrature;
  r.breakdown.assign(m, 0.0);
  r.breakdown[0] = std::pow(f.value_at_zero_real(), m);

  const double half_width = (m - 1) * f.support_radius();
  double imag_leak = 0.0;
  for (int p = 2; p <= m; ++p) {
    double block = 0.0, block_err = 0.0;
    const auto classes = enumerate_surjection_classes(m, p);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const std::uint64_t stream =
          (static_cast<std::uint64_t>(m) << 40) |
          (static_cast<std::uint64_t>(p) << 20) | c;
      Estimate e =
          integrate_chain(f, classes[c], half_width, spec, stream, &imag_leak);
      block += e.value;
      block_err += e.error;
    }
    const double weight = std::pow(gamma, p - 1);
    r.breakdown[p - 1] = weight * block;
    r.error_estimate += weight * (block_err + imag_leak);
    imag_leak = 0.0;
  }
  for (double b : r.breakdown) r.value += b;
  return r;
}

double high_density_moment(const CompactKernel& f, double gamma, int m,
                           const ConvolutionOptions& opts) {
  if (m < 1) throw std::invalid_argument("high_density_moment: need m >= 1");
  ConvolutionPower conv = convolution_power_at_zero(f, m, opts);
  return std::pow(gamma, m - 1) * conv.value;
}

double second_order_term(const CompactKernel& f, double gamma, int m,
                         const ConvolutionOptions& opts) {
  if (m < 2) throw std::invalid_argument("second_order_term: need m >= 2");
  std::vector<double> conv(m, 0.0);  // conv[p] = f^(*p)(0), p = 1..m-1
  for (int p = 1; p <= m - 1; ++p)
    conv[p] = convolution_power_at_zero(f, p, opts).value;
  double acc = 0.0;
  for (int p = 1; p <= m - 1; ++p) acc += p * conv[p] * conv[m - p];
  return std::pow(gamma, m - 2) * acc;
}

// ---- Poisson degree bound ------------------------------------------------------

double poisson_upper_tail(int j, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("poisson_upper_tail: gamma must be > 0");
  if (j <= 0) return 1.0;
  const long double g = gamma;
  const int mode = static_cast<int>(std::floor(gamma));

  if (j > mode) {
    // terms decrease from i = j on; forward summation is stable
    long double t =
        expl(-g + static_cast<long double>(j) * logl(g) -
             lgammal(static_cast<long double>(j) + 1.0L));
    long double sum = 0.0L;
    for (int i = j;; ++i) {
      sum += t;
      t *= g / static_cast<long double>(i + 1);
      if (t == 0.0L || (i > j + 4 && t < sum * 1e-22L)) break;
    }
    return static_cast<double>(sum);
  }
  // below the mode the complement is the short, increasing-term sum
  long double t = expl(-g);
  long double head = 0.0L;
  for (int i = 0; i < j; ++i) {
    head += t;
    t *= g / static_cast<long double>(i + 1);
  }
  return static_cast<double>(1.0L - head);
}

PoissonBound poisson_bound_j(std::int64_t n, double gamma) {
  if (n < 1) throw std::invalid_argument("poisson_bound_j: need n >= 1");
  if (!(gamma > 0.0))
    throw std::invalid_argument("poisson_bound_j: gamma must be > 0");

  int j = 0;
  while (static_cast<double>(n) * poisson_upper_tail(j + 1, gamma) > 1.0) ++j;

  PoissonBound b;
  b.j = j;
  b.tail_at_j = poisson_upper_tail(j, gamma);
  b.tail_above_j = poisson_upper_tail(j + 1, gamma);

  // re-verify both sides of the sandwich before handing the value out
  if (static_cast<double>(n) * b.tail_above_j > 1.0)
    throw std::runtime_error("poisson_bound_j: upper recheck failed");
  if (!(1.0 < static_cast<double>(n) * b.tail_at_j)) {
    if (j != 0)
      throw std::runtime_error("poisson_bound_j: lower recheck failed");
    b.degenerate = true;  // n = 1: no j satisfies the strict side
  }
  return b;
}

// ---- correlation functionals ----------------------------------------------------

double correlation_M2(const PeriodicKernel& F, const QuadratureSpec& spec) {
  if (!F.real_valued())
    throw std::invalid_argument(
        "correlation_M2: closed form applies to real-valued kernels");
  return -kernel_l2_norm_sq(F, spec).value;
}

McEstimate correlation_Mm_mc(const PeriodicKernel& F, int m, int k,
                             std::int64_t samples, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("correlation_Mm_mc: need m >= 2");
  if (k < 1) throw std::invalid_argument("correlation_Mm_mc: need k >= 1");
  if (samples < 2)
    throw std::invalid_argument("correlation_Mm_mc: need samples >= 2");
  if (!F.hermitian())
    throw std::invalid_argument(
        "correlation_Mm_mc: determinants are only real for hermitian "
        "kernels");

  const int d = F.dim();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd pts(d, m);
  double sum = 0.0, sum_sq = 0.0;

  if (F.real_valued()) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> diff(d);
    for (std::int64_t s = 0; s < samples; ++s) {
      for (int a = 0; a < m; ++a)
        for (int t = 0; t < d; ++t) pts(t, a) = uniform01(rng) - 0.5;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < a; ++b) {
          for (int t = 0; t < d; ++t) diff[t] = pts(t, a) - pts(t, b);
          double v = F.real_at(diff.data());
          A(a, b) = v;
          A(b, a) = v;
        }
      double det = A.determinant();
      double val = std::pow(det, k);
      sum += val;
      sum_sq += val * val;
    }
  } else {
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(m, m);
    Eigen::VectorXd diff(d);
    for (std::int64_t s = 0; s < samples; ++s) {
      for (int a = 0; a < m; ++a)
        for (int t = 0; t < d; ++t) pts(t, a) = uniform01(rng) - 0.5;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < a; ++b) {
          for (int t = 0; t < d; ++t) diff[t] = pts(t, a) - pts(t, b);
          Complex v = F(diff);
          A(a, b) = v;
          A(b, a) = std::conj(v);
        }
      double det = A.determinant().real();
      double val = std::pow(det, k);
      sum += val;
      sum_sq += val * val;
    }
  }

  McEstimate est;
  est.samples = samples;
  est.mean = sum / static_cast<double>(samples);
  double var =
      (sum_sq - static_cast<double>(samples) * est.mean * est.mean) /
      static_cast<double>(samples - 1);
  est.se = std::sqrt(std::max(0.0, var) / static_cast<double>(samples));
  return est;
}

}  // namespace erm
