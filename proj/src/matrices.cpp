#include "erm/matrices.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace erm {

namespace {

Provenance make_provenance(const std::string& kernel_id, const PointSet& pts,
                           const char* builder) {
  Provenance prov;
  prov.kernel_id = kernel_id;
  prov.model_tag = pts.model_tag();
  prov.builder = builder;
  prov.seed = pts.seed;
  prov.n = pts.n();
  return prov;
}

void require_torus(const PointSet& pts, const char* who) {
  if (pts.model != Model::Torus)
    throw std::invalid_argument(std::string(who) +
                                ": needs a torus point set");
}

// Shared pair loop for the fixed-kernel builders.  diff_buf holds the
// canonical difference X_i - X_j for the evaluation of column j against
// row i; entries are mirrored, never recomputed.
HermitianMatrix fill_periodic(const PeriodicKernel& F, const PointSet& pts,
                              const char* builder) {
  if (F.dim() != pts.dim())
    throw std::invalid_argument(std::string(builder) +
                                ": kernel/point dimension mismatch");
  const int n = pts.n();
  const int d = pts.dim();
  HermitianMatrix H;
  H.provenance = make_provenance(F.id(), pts, builder);
  H.hermitian = F.hermitian();
  std::vector<double> diff(d), neg(d);
  if (F.real_valued()) {
    Eigen::MatrixXd m(n, n);
    const double f0 = F.value_at_zero_real();
    for (int i = 0; i < n; ++i) {
      m(i, i) = f0;
      for (int j = 0; j < i; ++j) {
        for (int a = 0; a < d; ++a) {
          diff[a] = wrap_unit(pts.coords(a, i) - pts.coords(a, j));
          neg[a] = -diff[a];
        }
        m(i, j) = F.real_at(diff.data());
        m(j, i) = H.hermitian ? m(i, j) : F.real_at(neg.data());
      }
    }
    H.data = std::move(m);
    return H;
  }
  Eigen::MatrixXcd m(n, n);
  Eigen::VectorXd w(d);
  const Complex f0 = F(Eigen::VectorXd::Zero(d));
  for (int i = 0; i < n; ++i) {
    m(i, i) = f0;
    for (int j = 0; j < i; ++j) {
      for (int a = 0; a < d; ++a)
        w[a] = wrap_unit(pts.coords(a, i) - pts.coords(a, j));
      Complex v = F(w);
      m(i, j) = v;
      m(j, i) = H.hermitian ? std::conj(v) : F(-w);
    }
  }
  H.data = std::move(m);
  return H;
}

}  // namespace

double HermitianMatrix::trace_real() const {
  if (is_real()) return real().trace();
  Complex t = cplx().trace();
  return t.real();
}

double HermitianMatrix::frobenius_sq() const {
  return is_real() ? real().squaredNorm() : cplx().squaredNorm();
}

HermitianMatrix build_fixed_kernel_matrix(const PeriodicKernel& F,
                                          const PointSet& pts) {
  require_torus(pts, "build_fixed_kernel_matrix");
  return fill_periodic(F, pts, "build_fixed_kernel_matrix");
}

HermitianMatrix build_scaled_kernel_matrix(const CompactKernel& f,
                                           const PointSet& pts,
                                           BoundaryRule boundary) {
  if (pts.model != Model::ScaledCube || !(pts.delta > 0.0))
    throw std::invalid_argument(
        "build_scaled_kernel_matrix: needs a scaled-model point set with "
        "delta set");
  if (f.dim() != pts.dim())
    throw std::invalid_argument(
        "build_scaled_kernel_matrix: kernel/point dimension mismatch");
  const int n = pts.n();
  const int d = pts.dim();
  const double inv_delta = 1.0 / pts.delta;
  const bool wrap = boundary == BoundaryRule::PeriodicExtension;
  HermitianMatrix H;
  H.provenance = make_provenance(f.id(), pts, "build_scaled_kernel_matrix");
  H.hermitian = f.hermitian();
  std::vector<double> diff(d), neg(d);
  if (f.real_valued()) {
    Eigen::MatrixXd m(n, n);
    const double f0 = f.value_at_zero_real();
    for (int i = 0; i < n; ++i) {
      m(i, i) = f0;
      for (int j = 0; j < i; ++j) {
        for (int a = 0; a < d; ++a) {
          double t = pts.coords(a, i) - pts.coords(a, j);
          diff[a] = (wrap ? wrap_unit(t) : t) * inv_delta;
          neg[a] = -diff[a];
        }
        m(i, j) = f.real_at(diff.data());
        m(j, i) = H.hermitian ? m(i, j) : f.real_at(neg.data());
      }
    }
    H.data = std::move(m);
    return H;
  }
  Eigen::MatrixXcd m(n, n);
  Eigen::VectorXd w(d);
  const Complex f0 = f(Eigen::VectorXd::Zero(d));
  for (int i = 0; i < n; ++i) {
    m(i, i) = f0;
    for (int j = 0; j < i; ++j) {
      for (int a = 0; a < d; ++a) {
        double t = pts.coords(a, i) - pts.coords(a, j);
        w[a] = (wrap ? wrap_unit(t) : t) * inv_delta;
      }
      Complex v = f(w);
      m(i, j) = v;
      m(j, i) = H.hermitian ? std::conj(v) : f(-w);
    }
  }
  H.data = std::move(m);
  return H;
}

HermitianMatrix build_geometric_adjacency(const PointSet& pts, double radius,
                                          RadiusScale scale) {
  if (!(radius > 0.0))
    throw std::invalid_argument("build_geometric_adjacency: radius must be > 0");
  double r = radius;
  if (scale == RadiusScale::ScaledByDelta) {
    if (!(pts.delta > 0.0))
      throw std::invalid_argument(
          "build_geometric_adjacency: ScaledByDelta needs delta on the point "
          "set");
    r *= pts.delta;
  }
  const int n = pts.n();
  const int d = pts.dim();
  const bool wrap = pts.model == Model::Torus;
  const double r2 = r * r;
  HermitianMatrix H;
  H.provenance = make_provenance("geometric(radius=" + std::to_string(r) + ")",
                                 pts, "build_geometric_adjacency");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        double t = pts.coords(a, i) - pts.coords(a, j);
        if (wrap) t = wrap_unit(t);
        s += t * t;
      }
      if (s <= r2) {
        m(i, j) = 1.0;
        m(j, i) = 1.0;
      }
    }
  H.data = std::move(m);
  return H;
}

HermitianMatrix build_row_sum_deformed(const PeriodicKernel& F,
                                       const PointSet& pts, double u) {
  if (!F.real_valued())
    throw std::invalid_argument(
        "build_row_sum_deformed: complex-valued kernels have complex row "
        "sums; only real-valued kernels are accepted");
  require_torus(pts, "build_row_sum_deformed");
  HermitianMatrix H = fill_periodic(F, pts, "build_row_sum_deformed");
  Eigen::MatrixXd& m = std::get<0>(H.data);
  Eigen::VectorXd row_sums = m.rowwise().sum();
  m.diagonal() -= u * row_sums;
  return H;
}

HermitianMatrix build_centered_matrix(const PeriodicKernel& F,
                                      const PointSet& pts) {
  require_torus(pts, "build_centered_matrix");
  HermitianMatrix H = fill_periodic(F, pts, "build_centered_matrix");
  const double f0 = F.value_at_zero_real();
  if (H.is_real())
    std::get<0>(H.data).diagonal().array() -= f0;
  else
    std::get<1>(H.data).diagonal().array() -= f0;
  return H;
}

int max_degree(const HermitianMatrix& adjacency) {
  if (!adjacency.is_real())
    throw std::invalid_argument("max_degree: expects a real 0/1 matrix");
  const Eigen::MatrixXd& m = adjacency.real();
  if (m.rows() == 0) return 0;
  double deg = m.rowwise().sum().maxCoeff();
  return static_cast<int>(std::lround(deg));
}

void write_matrix_binary(const HermitianMatrix& H, std::ostream& out) {
  std::int64_t n = H.order();
  std::uint8_t is_real = H.is_real() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&is_real), sizeof is_real);
  if (H.is_real()) {
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        double v = H.real()(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        Complex v = H.cplx()(i, j);
        double re = v.real(), im = v.imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof re);
        out.write(reinterpret_cast<const char*>(&im), sizeof im);
      }
  }
  if (!out) throw std::runtime_error("write_matrix_binary: stream failure");
}

HermitianMatrix read_matrix_binary(std::istream& in) {
  std::int64_t n = 0;
  std::uint8_t is_real = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&is_real), sizeof is_real);
  if (!in || n < 1)
    throw std::runtime_error("read_matrix_binary: bad header");
  HermitianMatrix H;
  H.provenance.builder = "read_matrix_binary";
  H.provenance.n = static_cast<int>(n);
  if (is_real) {
    Eigen::MatrixXd m(n, n);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        in.read(reinterpret_cast<char*>(&m(i, j)), sizeof(double));
    if (!in) throw std::runtime_error("read_matrix_binary: truncated data");
    H.hermitian = (m.array() == m.transpose().array()).all();
    H.data = std::move(m);
  } else {
    Eigen::MatrixXcd m(n, n);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        double re = 0.0, im = 0.0;
        in.read(reinterpret_cast<char*>(&re), sizeof re);
        in.read(reinterpret_cast<char*>(&im), sizeof im);
        m(i, j) = Complex(re, im);
      }
    if (!in) throw std::runtime_error("read_matrix_binary: truncated data");
    H.hermitian = (m.array() == m.adjoint().array()).all();
    H.data = std::move(m);
  }
  return H;
}

}  // namespace erm
