#include "erm/kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "erm/common.hpp"
#include "erm/pointset.hpp"

namespace erm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

double ball_volume(int d, double r) {
  return std::pow(std::numbers::pi, 0.5 * d) * std::pow(r, d) /
         std::tgamma(0.5 * d + 1.0);
}

// Central value of the density of a sum of m independent uniform(-1/2,1/2)
// variables (Irwin-Hall, shifted).  Drives the closed form
// f^{*m}(0) = ((2r)^{m-1} d_m(0))^d for the box kernel.
double irwin_hall_central(int m) {
  double sum = 0.0;
  double binom = 1.0;  // C(m, k)
  for (int k = 0; k <= m / 2; ++k) {
    double base = 0.5 * m - k;
    double term = binom * std::pow(base, m - 1);
    sum += (k % 2 == 0) ? term : -term;
    binom = binom * (m - k) / (k + 1);
  }
  return sum / std::tgamma(static_cast<double>(m));
}

void check_claims(const std::function<Complex(const Eigen::VectorXd&)>& eval,
                  int d, double half_width, bool hermitian, bool real_valued,
                  const char* who) {
  std::mt19937_64 rng(0xc1a1135eedULL);
  Eigen::VectorXd x(d);
  for (int trial = 0; trial < 32; ++trial) {
    for (int i = 0; i < d; ++i) x[i] = (uniform01(rng) - 0.5) * 2.0 * half_width;
    Complex v = eval(x);
    double scale = 1.0 + std::abs(v);
    if (real_valued && std::abs(v.imag()) > 1e-9 * scale)
      throw std::invalid_argument(std::string(who) +
                                  ": kernel declared real-valued but eval has an "
                                  "imaginary part");
    if (hermitian) {
      Complex w = eval(-x);
      if (std::abs(w - std::conj(v)) > 1e-9 * scale)
        throw std::invalid_argument(std::string(who) +
                                    ": kernel declared hermitian but "
                                    "eval(-x) != conj(eval(x))");
    }
  }
}

}  // namespace

// ---- PeriodicKernel ------------------------------------------------------

PeriodicKernel PeriodicKernel::box(int d, double r) {
  if (d < 1) throw std::invalid_argument("PeriodicKernel::box: d must be >= 1");
  if (!(r > 0.0 && r <= 0.5))
    throw std::invalid_argument("PeriodicKernel::box: need r in (0, 1/2]");
  PeriodicKernel F;
  F.family_ = KernelFamily::BoxIndicator;
  F.d_ = d;
  F.radius_ = r;
  F.hermitian_ = true;
  F.real_valued_ = true;
  std::ostringstream os;
  os << "box(d=" << d << ",r=" << r << ")";
  F.id_ = os.str();
  return F;
}

PeriodicKernel PeriodicKernel::ball(int d, double r) {
  if (d < 1) throw std::invalid_argument("PeriodicKernel::ball: d must be >= 1");
  if (!(r > 0.0 && r <= 0.5))
    throw std::invalid_argument("PeriodicKernel::ball: need r in (0, 1/2]");
  PeriodicKernel F;
  F.family_ = KernelFamily::BallIndicator;
  F.d_ = d;
  F.radius_ = r;
  F.hermitian_ = true;
  F.real_valued_ = true;
  std::ostringstream os;
  os << "ball(d=" << d << ",r=" << r << ")";
  F.id_ = os.str();
  return F;
}

PeriodicKernel PeriodicKernel::fourier_series(
    int d, const std::map<std::vector<int>, Complex>& coeffs) {
  if (d < 1)
    throw std::invalid_argument("PeriodicKernel::fourier_series: d must be >= 1");
  PeriodicKernel F;
  F.family_ = KernelFamily::FourierSeries;
  F.d_ = d;
  F.hermitian_ = true;
  F.real_valued_ = true;
  for (const auto& [key, c] : coeffs) {
    if (static_cast<int>(key.size()) != d)
      throw std::invalid_argument(
          "PeriodicKernel::fourier_series: lattice point dimension mismatch");
    Eigen::VectorXi k(d);
    for (int i = 0; i < d; ++i) k[i] = key[i];
    F.series_.emplace_back(k, c);
    if (std::abs(c.imag()) > 1e-14 * (1.0 + std::abs(c))) F.hermitian_ = false;
  }
  // Real-valued iff coefficients come in conjugate pairs c(-k) = conj(c(k)).
  for (const auto& [k, c] : F.series_) {
    Complex partner{0.0, 0.0};
    for (const auto& [k2, c2] : F.series_)
      if (k2 == -k) {
        partner = c2;
        break;
      }
    if (std::abs(partner - std::conj(c)) > 1e-12 * (1.0 + std::abs(c))) {
      F.real_valued_ = false;
      break;
    }
  }
  std::ostringstream os;
  os << "fourier_series(d=" << d << ",terms=" << F.series_.size() << ")";
  F.id_ = os.str();
  return F;
}

PeriodicKernel PeriodicKernel::pure_mode(const Eigen::VectorXi& k) {
  if (k.size() < 1)
    throw std::invalid_argument("PeriodicKernel::pure_mode: empty lattice point");
  PeriodicKernel F;
  F.family_ = KernelFamily::PureMode;
  F.d_ = static_cast<int>(k.size());
  F.mode_ = k;
  F.hermitian_ = true;  // e^{2 i pi k.(-x)} = conj(e^{2 i pi k.x})
  F.real_valued_ = k.isZero();
  std::ostringstream os;
  os << "pure_mode(k=[";
  for (int i = 0; i < F.d_; ++i) os << (i ? "," : "") << k[i];
  os << "])";
  F.id_ = os.str();
  return F;
}

PeriodicKernel PeriodicKernel::custom(int d, KernelFn eval, bool hermitian,
                                      bool real_valued,
                                      std::optional<LatticeFn> fourier) {
  if (d < 1) throw std::invalid_argument("PeriodicKernel::custom: d must be >= 1");
  if (!eval) throw std::invalid_argument("PeriodicKernel::custom: eval required");
  check_claims(eval, d, 0.5, hermitian, real_valued, "PeriodicKernel::custom");
  PeriodicKernel F;
  F.family_ = KernelFamily::Custom;
  F.d_ = d;
  F.custom_ = std::move(eval);
  F.custom_fourier_ = std::move(fourier);
  F.hermitian_ = hermitian;
  F.real_valued_ = real_valued;
  std::ostringstream os;
  os << "custom_periodic(d=" << d << ")";
  F.id_ = os.str();
  return F;
}

Complex PeriodicKernel::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != d_)
    throw std::invalid_argument("PeriodicKernel: dimension mismatch");
  if (real_valued_) return Complex(real_at(x.data()), 0.0);
  Eigen::VectorXd w(d_);
  for (int i = 0; i < d_; ++i) w[i] = wrap_unit(x[i]);
  switch (family_) {
    case KernelFamily::PureMode:
      return std::polar(1.0, kTwoPi * mode_.cast<double>().dot(w));
    case KernelFamily::FourierSeries: {
      Complex s{0.0, 0.0};
      for (const auto& [k, c] : series_)
        s += c * std::polar(1.0, kTwoPi * k.cast<double>().dot(w));
      return s;
    }
    case KernelFamily::Custom:
      return custom_(w);
    default:
      return Complex(real_at(x.data()), 0.0);
  }
}

double PeriodicKernel::real_at(const double* x) const {
  switch (family_) {
    case KernelFamily::BoxIndicator: {
      for (int i = 0; i < d_; ++i)
        if (std::abs(wrap_unit(x[i])) > radius_) return 0.0;
      return 1.0;
    }
    case KernelFamily::BallIndicator: {
      double s = 0.0;
      for (int i = 0; i < d_; ++i) {
        double w = wrap_unit(x[i]);
        s += w * w;
      }
      return s <= radius_ * radius_ ? 1.0 : 0.0;
    }
    case KernelFamily::PureMode:
      if (!real_valued_)
        throw std::logic_error("PeriodicKernel::real_at: kernel is complex-valued");
      return 1.0;  // k = 0
    case KernelFamily::FourierSeries: {
      if (!real_valued_)
        throw std::logic_error("PeriodicKernel::real_at: kernel is complex-valued");
      Complex s{0.0, 0.0};
      for (const auto& [k, c] : series_) {
        double phase = 0.0;
        for (int i = 0; i < d_; ++i) phase += k[i] * wrap_unit(x[i]);
        s += c * std::polar(1.0, kTwoPi * phase);
      }
      return s.real();
    }
    case KernelFamily::Custom: {
      if (!real_valued_)
        throw std::logic_error("PeriodicKernel::real_at: kernel is complex-valued");
      Eigen::VectorXd w(d_);
      for (int i = 0; i < d_; ++i) w[i] = wrap_unit(x[i]);
      return custom_(w).real();
    }
  }
  return 0.0;
}

double PeriodicKernel::value_at_zero_real() const {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d_);
  Complex v = (*this)(zero);
  if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v)))
    throw std::domain_error("PeriodicKernel: F(0) is not real");
  return v.real();
}

// ---- CompactKernel -------------------------------------------------------

CompactKernel CompactKernel::box(int d, double r) {
  if (d < 1) throw std::invalid_argument("CompactKernel::box: d must be >= 1");
  if (!(r > 0.0 && r <= 0.5))
    throw std::invalid_argument("CompactKernel::box: need r in (0, 1/2]");
  CompactKernel f;
  f.family_ = KernelFamily::BoxIndicator;
  f.d_ = d;
  f.radius_ = r;
  f.support_radius_ = r;
  f.sup_abs_ = 1.0;
  f.hermitian_ = true;
  f.real_valued_ = true;
  std::ostringstream os;
  os << "box(d=" << d << ",r=" << r << ")";
  f.id_ = os.str();
  return f;
}

CompactKernel CompactKernel::ball(int d, double r) {
  if (d < 1) throw std::invalid_argument("CompactKernel::ball: d must be >= 1");
  if (!(r > 0.0 && r <= 0.5))
    throw std::invalid_argument("CompactKernel::ball: need r in (0, 1/2]");
  CompactKernel f;
  f.family_ = KernelFamily::BallIndicator;
  f.d_ = d;
  f.radius_ = r;
  f.support_radius_ = r;
  f.sup_abs_ = 1.0;
  f.hermitian_ = true;
  f.real_valued_ = true;
  std::ostringstream os;
  os << "ball(d=" << d << ",r=" << r << ")";
  f.id_ = os.str();
  return f;
}

CompactKernel CompactKernel::custom(int d, KernelFn eval, bool hermitian,
                                    bool real_valued, double support_radius,
                                    std::optional<KernelFn> fourier,
                                    std::optional<double> sup_abs) {
  if (d < 1) throw std::invalid_argument("CompactKernel::custom: d must be >= 1");
  if (!eval) throw std::invalid_argument("CompactKernel::custom: eval required");
  if (!(support_radius > 0.0 && support_radius <= 0.5))
    throw std::invalid_argument(
        "CompactKernel::custom: support_radius must lie in (0, 1/2] so the "
        "support fits inside Omega");
  check_claims(eval, d, support_radius, hermitian, real_valued,
               "CompactKernel::custom");
  CompactKernel f;
  f.family_ = KernelFamily::Custom;
  f.d_ = d;
  f.custom_ = std::move(eval);
  f.custom_fourier_ = std::move(fourier);
  f.support_radius_ = support_radius;
  f.hermitian_ = hermitian;
  f.real_valued_ = real_valued;
  if (sup_abs) {
    f.sup_abs_ = *sup_abs;
  } else {
    // Grid scan; an estimate, adequate for reporting and radius bounds.
    int nodes = d == 1 ? 4096 : (d == 2 ? 256 : 48);
    double h = 2.0 * support_radius / nodes;
    Eigen::VectorXd x(d);
    std::vector<int> idx(d, 0);
    double best = 0.0;
    for (;;) {
      for (int i = 0; i < d; ++i) x[i] = -support_radius + (idx[i] + 0.5) * h;
      best = std::max(best, std::abs(f.custom_(x)));
      int a = 0;
      while (a < d && ++idx[a] >= nodes) idx[a++] = 0;
      if (a == d) break;
    }
    f.sup_abs_ = best;
  }
  std::ostringstream os;
  os << "custom_compact(d=" << d << ",R=" << support_radius << ")";
  f.id_ = os.str();
  return f;
}

Complex CompactKernel::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != d_)
    throw std::invalid_argument("CompactKernel: dimension mismatch");
  if (real_valued_) return Complex(real_at(x.data()), 0.0);
  for (int i = 0; i < d_; ++i)
    if (std::abs(x[i]) > support_radius_) return Complex(0.0, 0.0);
  return custom_(x);
}

double CompactKernel::real_at(const double* x) const {
  switch (family_) {
    case KernelFamily::BoxIndicator: {
      for (int i = 0; i < d_; ++i)
        if (std::abs(x[i]) > radius_) return 0.0;
      return 1.0;
    }
    case KernelFamily::BallIndicator: {
      double s = 0.0;
      for (int i = 0; i < d_; ++i) s += x[i] * x[i];
      return s <= radius_ * radius_ ? 1.0 : 0.0;
    }
    case KernelFamily::Custom: {
      if (!real_valued_)
        throw std::logic_error("CompactKernel::real_at: kernel is complex-valued");
      for (int i = 0; i < d_; ++i)
        if (std::abs(x[i]) > support_radius_) return 0.0;
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x, d_);
      return custom_(v).real();
    }
    default:
      throw std::logic_error("CompactKernel::real_at: unexpected family");
  }
}

double CompactKernel::value_at_zero_real() const {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d_);
  Complex v = (*this)(zero);
  if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v)))
    throw std::domain_error("CompactKernel: f(0) is not real");
  return v.real();
}

// ---- Fourier coefficients and transforms ----------------------------------

FourierValue fourier_coefficient(const PeriodicKernel& F, const Eigen::VectorXi& k,
                                 const QuadratureSpec& spec) {
  if (k.size() != F.dim())
    throw std::invalid_argument("fourier_coefficient: dimension mismatch");
  FourierValue out;
  switch (F.family()) {
    case KernelFamily::BoxIndicator: {
      double v = 1.0;
      for (int i = 0; i < F.dim(); ++i)
        v *= 2.0 * F.radius() * sinc(kTwoPi * k[i] * F.radius());
      out.value = v;
      out.exact = true;
      return out;
    }
    case KernelFamily::FourierSeries: {
      for (const auto& [k2, c] : F.series_terms())
        if (k2 == k) {
          out.value = c;
          break;
        }
      out.exact = true;
      return out;
    }
    case KernelFamily::PureMode: {
      out.value = (k == F.mode()) ? 1.0 : 0.0;
      out.exact = true;
      return out;
    }
    case KernelFamily::BallIndicator: {
      // Real by evenness; integrate cos over the support cube.
      Eigen::VectorXd kd = k.cast<double>();
      double r2 = F.radius() * F.radius();
      int d = F.dim();
      Estimate e = midpoint_integrate(
          d, spec.nodes_for(d), F.radius(), [&](const double* x) {
            double s2 = 0.0, phase = 0.0;
            for (int i = 0; i < d; ++i) {
              s2 += x[i] * x[i];
              phase += kd[i] * x[i];
            }
            return s2 <= r2 ? std::cos(kTwoPi * phase) : 0.0;
          });
      out.value = e.value;
      out.error = e.error;
      return out;
    }
    case KernelFamily::Custom: {
      if (F.custom_fourier_) {
        out.value = (*F.custom_fourier_)(k);
        out.exact = true;
        return out;
      }
      Eigen::VectorXd kd = k.cast<double>();
      int d = F.dim();
      auto phase_at = [&](const double* x) {
        double p = 0.0;
        for (int i = 0; i < d; ++i) p += kd[i] * x[i];
        return kTwoPi * p;
      };
      Eigen::VectorXd buf(d);
      auto eval = [&](const double* x) {
        for (int i = 0; i < d; ++i) buf[i] = x[i];
        return F.custom_(buf);
      };
      Estimate re = midpoint_integrate(d, spec.nodes_for(d), 0.5,
                                       [&](const double* x) {
                                         Complex v = eval(x);
                                         double p = phase_at(x);
                                         return v.real() * std::cos(p) +
                                                v.imag() * std::sin(p);
                                       });
      out.value = re.value;
      out.error = re.error;
      if (!F.hermitian()) {
        Estimate im = midpoint_integrate(d, spec.nodes_for(d), 0.5,
                                         [&](const double* x) {
                                           Complex v = eval(x);
                                           double p = phase_at(x);
                                           return v.imag() * std::cos(p) -
                                                  v.real() * std::sin(p);
                                         });
        out.value = Complex(re.value, im.value);
        out.error += im.error;
      }
      return out;
    }
  }
  throw std::logic_error("fourier_coefficient: unexpected family");
}

FourierValue fourier_transform(const CompactKernel& f, const Eigen::VectorXd& xi,
                               const QuadratureSpec& spec) {
  if (xi.size() != f.dim())
    throw std::invalid_argument("fourier_transform: dimension mismatch");
  FourierValue out;
  if (f.family() == KernelFamily::BoxIndicator) {
    double v = 1.0;
    for (int i = 0; i < f.dim(); ++i)
      v *= 2.0 * f.radius() * sinc(kTwoPi * xi[i] * f.radius());
    out.value = v;
    out.exact = true;
    return out;
  }
  if (f.family() == KernelFamily::Custom && f.custom_fourier_) {
    out.value = (*f.custom_fourier_)(xi);
    out.exact = true;
    return out;
  }
  int d = f.dim();
  double R = f.support_radius();
  auto phase_at = [&](const double* x) {
    double p = 0.0;
    for (int i = 0; i < d; ++i) p += xi[i] * x[i];
    return kTwoPi * p;
  };
  if (f.real_valued()) {
    Estimate re = midpoint_integrate(d, spec.nodes_for(d), R,
                                     [&](const double* x) {
                                       double v = f.real_at(x);
                                       return v == 0.0 ? 0.0
                                                       : v * std::cos(phase_at(x));
                                     });
    out.value = re.value;
    out.error = re.error;
    if (!f.hermitian()) {
      Estimate im = midpoint_integrate(d, spec.nodes_for(d), R,
                                       [&](const double* x) {
                                         double v = f.real_at(x);
                                         return v == 0.0
                                                    ? 0.0
                                                    : -v * std::sin(phase_at(x));
                                       });
      out.value = Complex(re.value, im.value);
      out.error += im.error;
    }
    return out;
  }
  Eigen::VectorXd buf(d);
  auto eval = [&](const double* x) {
    for (int i = 0; i < d; ++i) buf[i] = x[i];
    return f(buf);
  };
  Estimate re = midpoint_integrate(d, spec.nodes_for(d), R,
                                   [&](const double* x) {
                                     Complex v = eval(x);
                                     double p = phase_at(x);
                                     return v.real() * std::cos(p) +
                                            v.imag() * std::sin(p);
                                   });
  Estimate im = midpoint_integrate(d, spec.nodes_for(d), R,
                                   [&](const double* x) {
                                     Complex v = eval(x);
                                     double p = phase_at(x);
                                     return v.imag() * std::cos(p) -
                                            v.real() * std::sin(p);
                                   });
  out.value = Complex(re.value, im.value);
  out.error = re.error + im.error;
  return out;
}

NormValue kernel_l2_norm_sq(const PeriodicKernel& F, const QuadratureSpec& spec) {
  NormValue out;
  switch (F.family()) {
    case KernelFamily::BoxIndicator:
      out.value = std::pow(2.0 * F.radius(), F.dim());
      return out;
    case KernelFamily::BallIndicator:
      out.value = ball_volume(F.dim(), F.radius());
      return out;
    case KernelFamily::PureMode:
      out.value = 1.0;
      return out;
    case KernelFamily::FourierSeries: {
      double s = 0.0;
      for (const auto& [k, c] : F.series_terms()) s += std::norm(c);
      out.value = s;
      return out;
    }
    case KernelFamily::Custom: {
      int d = F.dim();
      Eigen::VectorXd buf(d);
      Estimate e = midpoint_integrate(d, spec.nodes_for(d), 0.5,
                                      [&](const double* x) {
                                        for (int i = 0; i < d; ++i) buf[i] = x[i];
                                        return std::norm(F(buf));
                                      });
      out.value = e.value;
      out.error = e.error;
      return out;
    }
  }
  throw std::logic_error("kernel_l2_norm_sq: unexpected family");
}

// ---- convolution powers ----------------------------------------------------

namespace {

size_t lattice_size(int half, int d) {
  size_t s = 1;
  for (int a = 0; a < d; ++a) s *= static_cast<size_t>(2 * half + 1);
  return s;
}

// f^{*m}(0) by iterated convolution on the lattice x = i h, i in
// [-n/2, n/2]^d, h = 2 m R / n.  The lattice spans the support of every
// intermediate power, so the only error is the mesh.  One convolution step
// costs (output nodes) x (support nodes of f).
double lattice_convolution_value(const CompactKernel& f, int m, int nodes) {
  int d = f.dim();
  double R = f.support_radius();
  if (m == 1) {
    std::vector<double> zero(d, 0.0);
    return f.real_at(zero.data());
  }
  int n = nodes % 2 ? nodes + 1 : nodes;
  double h = 2.0 * m * R / n;
  const int half_g = n / 2;
  const int half_f = static_cast<int>(std::floor(R / h)) + 1;

  auto flat = [d](const std::vector<int>& i, int half) {
    size_t idx = 0;
    for (int a = d - 1; a >= 0; --a)
      idx = idx * (2 * half + 1) + static_cast<size_t>(i[a] + half);
    return idx;
  };

  std::vector<double> fval(lattice_size(half_f, d));
  {
    std::vector<double> x(d);
    std::vector<int> i(d, -half_f);
    for (;;) {
      for (int a = 0; a < d; ++a) x[a] = i[a] * h;
      fval[flat(i, half_f)] = f.real_at(x.data());
      int a = 0;
      while (a < d && ++i[a] > half_f) i[a++] = -half_f;
      if (a == d) break;
    }
  }

  // g starts as f embedded in the full lattice
  std::vector<double> g(lattice_size(half_g, d), 0.0), gnext(g.size());
  {
    std::vector<int> i(d, -half_f);
    for (;;) {
      g[flat(i, half_g)] = fval[flat(i, half_f)];
      int a = 0;
      while (a < d && ++i[a] > half_f) i[a++] = -half_f;
      if (a == d) break;
    }
  }

  const double cell = std::pow(h, d);
  std::vector<int> out(d), j(d), t(d);
  for (int step = 2; step < m; ++step) {
    std::fill(gnext.begin(), gnext.end(), 0.0);
    // g^{*step} vanishes beyond step * half_f index units
    int half_out = std::min(half_g, step * (half_f + 1));
    std::fill(out.begin(), out.end(), -half_out);
    for (;;) {
      double acc = 0.0;
      std::fill(j.begin(), j.end(), -half_f);
      for (;;) {
        double fv = fval[flat(j, half_f)];
        if (fv != 0.0) {
          bool ok = true;
          for (int a = 0; a < d; ++a) {
            t[a] = out[a] - j[a];
            if (t[a] < -half_g || t[a] > half_g) {
              ok = false;
              break;
            }
          }
          if (ok) acc += fv * g[flat(t, half_g)];
        }
        int a = 0;
        while (a < d && ++j[a] > half_f) j[a++] = -half_f;
        if (a == d) break;
      }
      gnext[flat(out, half_g)] = acc * cell;
      int a = 0;
      while (a < d && ++out[a] > half_out) out[a++] = -half_out;
      if (a == d) break;
    }
    g.swap(gnext);
  }

  // final contraction: f^{*m}(0) = \int g(t) f(-t) dt over f's support
  double acc = 0.0;
  std::fill(j.begin(), j.end(), -half_f);
  for (;;) {
    for (int a = 0; a < d; ++a) t[a] = -j[a];
    double fv = fval[flat(t, half_f)];
    if (fv != 0.0) acc += fv * g[flat(j, half_g)];
    int a = 0;
    while (a < d && ++j[a] > half_f) j[a++] = -half_f;
    if (a == d) break;
  }
  return acc * cell;
}

// \int fhat(xi)^m dxi over [-cutoff, cutoff]^d by midpoint rule.  For the
// box kernel the integral factorizes across axes.
double fourier_route_value(const CompactKernel& f, int m,
                           const ConvolutionOptions& opts) {
  double cutoff = (m == 1) ? opts.xi_cutoff_m1 : opts.xi_cutoff;
  int d = f.dim();
  if (f.family() == KernelFamily::BoxIndicator) {
    double r = f.radius();
    auto axis = [&](double t) { return 2.0 * r * sinc(kTwoPi * t * r); };
    long n = std::lround(2.0 * cutoff / opts.xi_step);
    double h = 2.0 * cutoff / n;
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
      double t = -cutoff + (i + 0.5) * h;
      s += std::pow(axis(t), m);
    }
    return std::pow(s * h, d);
  }
  // Generic path: fhat per grid point (quadrature unless supplied), with a
  // point budget that coarsens the step in higher dimension.
  const double budget = 3e7;
  long per_axis = std::lround(2.0 * cutoff / opts.xi_step);
  double max_axis = std::floor(std::pow(budget, 1.0 / d));
  if (per_axis > max_axis) per_axis = static_cast<long>(max_axis);
  double h = 2.0 * cutoff / per_axis;
  QuadratureSpec qspec;
  Eigen::VectorXd xi(d);
  std::vector<long> idx(d, 0);
  double s = 0.0;
  for (;;) {
    for (int a = 0; a < d; ++a) xi[a] = -cutoff + (idx[a] + 0.5) * h;
    double v = fourier_transform(f, xi, qspec).value.real();
    s += std::pow(v, m);
    int a = 0;
    while (a < d && ++idx[a] >= per_axis) idx[a++] = 0;
    if (a == d) break;
  }
  return s * std::pow(h, d);
}

}  // namespace

ConvolutionPower convolution_power_at_zero(const CompactKernel& f, int m,
                                           const ConvolutionOptions& opts) {
  if (m < 1)
    throw std::invalid_argument("convolution_power_at_zero: m must be >= 1");
  if (!f.hermitian())
    throw std::invalid_argument(
        "convolution_power_at_zero: kernel must be hermitian");
  if (!f.real_valued())
    throw std::invalid_argument(
        "convolution_power_at_zero: complex-valued kernels not supported");
  ConvolutionPower out;
  if (m == 1) {
    // the 1-fold convolution at the origin is the kernel value itself
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(f.dim());
    double v = f.real_at(origin.data());
    out.value = out.grid_route = out.fourier_route = v;
    out.analytic = true;
    return out;
  }
  out.grid_route = lattice_convolution_value(f, m, opts.grid_nodes_for(f.dim()));
  out.fourier_route = fourier_route_value(f, m, opts);
  out.discrepancy = std::abs(out.grid_route - out.fourier_route);
  if (f.family() == KernelFamily::BoxIndicator) {
    double r = f.radius();
    double axis = std::pow(2.0 * r, m - 1) * irwin_hall_central(m);
    out.value = std::pow(axis, f.dim());
    out.analytic = true;
  } else {
    out.value = out.grid_route;
  }
  double scale = std::max({std::abs(out.value), std::abs(out.grid_route), 1e-12});
  if (out.discrepancy > opts.agreement_tol * scale) {
    std::ostringstream os;
    os << "convolution routes disagree: grid=" << out.grid_route
       << " fourier=" << out.fourier_route << " (m=" << m << ", " << f.id()
       << ")";
    out.warning = os.str();
  }
  return out;
}

// ---- level-set density -----------------------------------------------------

double LevelSetDensity::total_mass() const {
  double s = 0.0;
  for (double v : mass) s += v;
  return s;
}

double suggest_xi_cutoff(const CompactKernel& f, double eps0) {
  if (!(eps0 > 0.0))
    throw std::invalid_argument("suggest_xi_cutoff: eps0 must be > 0");
  int d = f.dim();
  QuadratureSpec spec;
  // Walk outward in windows of one oscillation period; stop after several
  // consecutive quiet windows.  Along any single axis the remaining axes sit
  // at 0 where |fhat| is maximal for product-type kernels.
  double period = 1.0 / (2.0 * f.support_radius());
  double last_loud = 0.0;
  int quiet = 0;
  for (double t0 = 0.0; t0 < 1e6; t0 += period) {
    double loudest = 0.0;
    for (int s = 0; s < 32; ++s) {
      double t = t0 + period * (s + 0.5) / 32.0;
      Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
      xi[0] = t;
      loudest = std::max(loudest, std::abs(fourier_transform(f, xi, spec).value));
    }
    if (loudest >= eps0) {
      last_loud = t0 + period;
      quiet = 0;
    } else if (++quiet >= 5) {
      return last_loud * 1.05;
    }
  }
  throw std::runtime_error("suggest_xi_cutoff: no decay found below eps0");
}

LevelSetDensity level_set_density(const CompactKernel& f,
                                  const LevelSetOptions& opts) {
  if (!(opts.eps0 > 0.0))
    throw std::invalid_argument("level_set_density: eps0 must be > 0");
  if (!f.hermitian())
    throw std::invalid_argument("level_set_density: kernel must be hermitian");
  int d = f.dim();
  double cutoff = opts.xi_cutoff > 0.0 ? opts.xi_cutoff
                                       : suggest_xi_cutoff(f, opts.eps0);
  long per_axis = std::max<long>(2, std::lround(2.0 * cutoff / opts.grid_step));
  double h = 2.0 * cutoff / per_axis;
  double cell = std::pow(h, d);

  // Pass over the grid collecting fhat values outside the punctured
  // neighborhood.  Box kernels factorize, so cache per-axis values.
  std::vector<double> values;
  if (f.family() == KernelFamily::BoxIndicator) {
    double r = f.radius();
    std::vector<double> axis(per_axis);
    for (long i = 0; i < per_axis; ++i) {
      double t = -cutoff + (i + 0.5) * h;
      axis[i] = 2.0 * r * sinc(kTwoPi * t * r);
    }
    std::vector<long> idx(d, 0);
    for (;;) {
      double v = 1.0;
      for (int a = 0; a < d; ++a) v *= axis[idx[a]];
      if (std::abs(v) >= opts.eps0) values.push_back(v);
      int a = 0;
      while (a < d && ++idx[a] >= per_axis) idx[a++] = 0;
      if (a == d) break;
    }
  } else {
    QuadratureSpec spec;
    Eigen::VectorXd xi(d);
    std::vector<long> idx(d, 0);
    for (;;) {
      for (int a = 0; a < d; ++a) xi[a] = -cutoff + (idx[a] + 0.5) * h;
      double v = fourier_transform(f, xi, spec).value.real();
      if (std::abs(v) >= opts.eps0) values.push_back(v);
      int a = 0;
      while (a < d && ++idx[a] >= per_axis) idx[a++] = 0;
      if (a == d) break;
    }
  }

  LevelSetDensity ls;
  ls.eps0 = opts.eps0;
  ls.xi_cutoff = cutoff;
  ls.grid_step = h;
  ls.dim = d;
  if (values.empty()) return ls;

  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto add_side = [&](double a, double b) {
    // uniform bins on [a, b], b > a
    int nb = opts.bins_per_side;
    double w = (b - a) / nb;
    size_t base = ls.bin_lo.size();
    for (int i = 0; i < nb; ++i) {
      ls.bin_lo.push_back(a + i * w);
      ls.bin_hi.push_back(a + (i + 1) * w);
      ls.mass.push_back(0.0);
    }
    return std::pair<size_t, double>(base, w);
  };
  std::pair<size_t, double> neg{0, 0.0}, pos{0, 0.0};
  bool has_neg = lo < -opts.eps0, has_pos = hi > opts.eps0;
  double neg_lo = std::nextafter(lo, -1e300);
  double pos_hi = std::nextafter(hi, 1e300);
  if (has_neg) neg = add_side(neg_lo, -opts.eps0);
  if (has_pos) pos = add_side(opts.eps0, pos_hi);
  for (double v : values) {
    if (v <= -opts.eps0 && has_neg) {
      int i = std::min<int>(opts.bins_per_side - 1,
                            static_cast<int>((v - neg_lo) / neg.second));
      ls.mass[neg.first + i] += cell;
    } else if (v >= opts.eps0 && has_pos) {
      int i = std::min<int>(opts.bins_per_side - 1,
                            static_cast<int>((v - opts.eps0) / pos.second));
      ls.mass[pos.first + i] += cell;
    }
  }
  return ls;
}

double level_set_moment(const LevelSetDensity& density, int m) {
  if (m < 0) throw std::invalid_argument("level_set_moment: m must be >= 0");
  double s = 0.0;
  for (size_t i = 0; i < density.mass.size(); ++i) {
    double c = 0.5 * (density.bin_lo[i] + density.bin_hi[i]);
    s += density.mass[i] * std::pow(c, m);
  }
  return s;
}

}  // namespace erm
