#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "erm/kernel.hpp"
#include "erm/matrices.hpp"
#include "erm/pointset.hpp"

using namespace erm;

namespace {

constexpr double kPi = 3.14159265358979323846;

PointSet torus_points_1d(std::initializer_list<double> xs) {
  PointSet pts;
  pts.coords.resize(1, static_cast<int>(xs.size()));
  int j = 0;
  for (double x : xs) pts.coords(0, j++) = x;
  pts.model = Model::Torus;
  return pts;
}

PointSet scaled_points_1d(std::initializer_list<double> xs, double delta) {
  PointSet pts = torus_points_1d(xs);
  pts.model = Model::ScaledCube;
  pts.delta = delta;
  pts.gamma = 1.0;
  return pts;
}

}  // namespace

TEST_CASE("fixed-kernel matrix matches direct evaluation entry by entry") {
  std::map<std::vector<int>, Complex> coeffs;
  coeffs[{0}] = 1.0;
  coeffs[{1}] = 0.5;
  coeffs[{-1}] = 0.5;
  auto F = PeriodicKernel::fourier_series(1, coeffs);
  PointSet pts = torus_points_1d({-0.31, 0.04, 0.27, 0.49});
  HermitianMatrix A = build_fixed_kernel_matrix(F, pts);

  REQUIRE(A.is_real());
  REQUIRE(A.hermitian);
  REQUIRE(A.order() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double w = wrap_unit(pts.coords(0, i) - pts.coords(0, j));
      double expect = 1.0 + std::cos(2.0 * kPi * w);
      CHECK(A.real()(i, j) == doctest::Approx(expect).epsilon(1e-14));
    }
  CHECK(A.real()(0, 1) == A.real()(1, 0));
  CHECK(A.provenance.builder == "build_fixed_kernel_matrix");
  CHECK(A.provenance.n == 4);
  CHECK(A.provenance.model_tag == pts.model_tag());
}

TEST_CASE("fixed-kernel diagonal is the kernel at zero and trace follows") {
  auto F = PeriodicKernel::box(2, 0.25);
  PointSet pts = sample_torus(37, 2, 11);
  HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
  for (int i = 0; i < 37; ++i) CHECK(A.real()(i, i) == 1.0);
  CHECK(A.trace_real() == doctest::Approx(37.0).epsilon(1e-15));
  double frob = 0.0;
  for (int i = 0; i < 37; ++i)
    for (int j = 0; j < 37; ++j) frob += A.real()(i, j) * A.real()(i, j);
  CHECK(A.frobenius_sq() == doctest::Approx(frob).epsilon(1e-13));
}

TEST_CASE("complex hermitian kernel stores exact conjugate mirrors") {
  auto F = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 3));
  PointSet pts = sample_torus(25, 1, 5);
  HermitianMatrix A = build_fixed_kernel_matrix(F, pts);

  REQUIRE_FALSE(A.is_real());
  REQUIRE(A.hermitian);
  const Eigen::MatrixXcd& m = A.cplx();
  for (int i = 0; i < 25; ++i) {
    CHECK(m(i, i) == Complex(1.0, 0.0));
    for (int j = 0; j < i; ++j) {
      // mirrored, not recomputed, so equality is bitwise
      CHECK(m(i, j).real() == m(j, i).real());
      CHECK(m(i, j).imag() == -m(j, i).imag());
      CHECK(std::abs(m(i, j)) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  // Entries factor as phi_i * conj(phi_j), so A phi = n phi.
  Eigen::VectorXcd phi(25);
  for (int i = 0; i < 25; ++i) {
    double angle = 2.0 * kPi * 3.0 * pts.coords(0, i);
    phi[i] = Complex(std::cos(angle), std::sin(angle));
  }
  Eigen::VectorXcd resid = m * phi - 25.0 * phi;
  CHECK(resid.lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("real but odd kernel is stored general with both triangles exact") {
  std::map<std::vector<int>, Complex> coeffs;
  coeffs[{1}] = Complex(0.0, -0.5);
  coeffs[{-1}] = Complex(0.0, 0.5);
  auto F = PeriodicKernel::fourier_series(1, coeffs);
  REQUIRE(F.real_valued());
  REQUIRE_FALSE(F.hermitian());
  PointSet pts = torus_points_1d({-0.2, 0.1, 0.35});
  HermitianMatrix A = build_fixed_kernel_matrix(F, pts);

  REQUIRE(A.is_real());
  REQUIRE_FALSE(A.hermitian);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double w = wrap_unit(pts.coords(0, i) - pts.coords(0, j));
      CHECK(A.real()(i, j) ==
            doctest::Approx(std::sin(2.0 * kPi * w)).epsilon(1e-13));
    }
  CHECK(A.real()(0, 1) == doctest::Approx(-A.real()(1, 0)).epsilon(1e-13));
}

TEST_CASE("centered matrix zeroes the diagonal and keeps known determinants") {
  std::map<std::vector<int>, Complex> coeffs;
  coeffs[{0}] = 1.0;
  coeffs[{1}] = 0.5;
  coeffs[{-1}] = 0.5;
  auto F = PeriodicKernel::fourier_series(1, coeffs);

  SUBCASE("two points: determinant is minus the squared off-diagonal") {
    PointSet pts = torus_points_1d({-0.17, 0.22});
    HermitianMatrix Ab = build_centered_matrix(F, pts);
    double a = Ab.real()(0, 1);
    CHECK(Ab.real()(0, 0) == 0.0);
    CHECK(Ab.real()(1, 1) == 0.0);
    CHECK(Ab.real().determinant() == doctest::Approx(-a * a).epsilon(1e-13));
  }

  SUBCASE("three points: determinant is twice the product of the cycle") {
    PointSet pts = torus_points_1d({-0.31, 0.04, 0.27});
    HermitianMatrix Ab = build_centered_matrix(F, pts);
    const Eigen::MatrixXd& m = Ab.real();
    for (int i = 0; i < 3; ++i) CHECK(m(i, i) == 0.0);
    double expect = 2.0 * m(0, 1) * m(1, 2) * m(2, 0);
    CHECK(m.determinant() == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("row-sum deformation at u = 1 kills row sums and the all-ones mode") {
  auto F = PeriodicKernel::box(1, 0.25);
  PointSet pts = sample_torus(60, 1, 21);
  HermitianMatrix M = build_row_sum_deformed(F, pts, 1.0);

  REQUIRE(M.is_real());
  Eigen::VectorXd row_sums = M.real().rowwise().sum();
  CHECK(row_sums.lpNorm<Eigen::Infinity>() < 1e-12);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(60);
  CHECK((M.real() * ones).lpNorm<Eigen::Infinity>() < 1e-12);

  SUBCASE("u = 0 leaves the plain matrix") {
    HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
    HermitianMatrix M0 = build_row_sum_deformed(F, pts, 0.0);
    CHECK((M0.real() - A.real()).lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("intermediate u only shifts the diagonal") {
    HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
    HermitianMatrix Mh = build_row_sum_deformed(F, pts, 0.5);
    Eigen::MatrixXd diff = A.real() - Mh.real();
    Eigen::VectorXd expect = 0.5 * A.real().rowwise().sum();
    CHECK((diff.diagonal() - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    diff.diagonal().setZero();
    CHECK(diff.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("geometric adjacency spans empty to complete graphs") {
  PointSet pts = sample_torus(30, 2, 33);

  SUBCASE("radius covering the torus diameter gives the complete graph") {
    HermitianMatrix Dm = build_geometric_adjacency(pts, 0.75, RadiusScale::Raw);
    const Eigen::MatrixXd& m = Dm.real();
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 30; ++j)
        CHECK(m(i, j) == (i == j ? 0.0 : 1.0));
    CHECK(max_degree(Dm) == 29);
  }

  SUBCASE("tiny radius gives the empty graph") {
    HermitianMatrix Dm =
        build_geometric_adjacency(pts, 1e-12, RadiusScale::Raw);
    CHECK(Dm.real().lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(max_degree(Dm) == 0);
  }
}

TEST_CASE("adjacency metric follows the model") {
  SUBCASE("torus points near opposite seams are neighbours") {
    PointSet pts = torus_points_1d({-0.49, 0.49});
    HermitianMatrix Dm = build_geometric_adjacency(pts, 0.05, RadiusScale::Raw);
    CHECK(Dm.real()(0, 1) == 1.0);
  }
  SUBCASE("the scaled model uses the plain Euclidean distance") {
    PointSet pts = scaled_points_1d({-0.49, 0.49}, 0.05);
    HermitianMatrix Dm = build_geometric_adjacency(pts, 0.05, RadiusScale::Raw);
    CHECK(Dm.real()(0, 1) == 0.0);
  }
  SUBCASE("ScaledByDelta multiplies the radius by delta") {
    PointSet pts = sample_for_scaled_model(40, 2, 1.0, 7);
    HermitianMatrix a =
        build_geometric_adjacency(pts, 1.0, RadiusScale::ScaledByDelta);
    HermitianMatrix b =
        build_geometric_adjacency(pts, pts.delta, RadiusScale::Raw);
    CHECK((a.real() - b.real()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("scaled builder separates plain and periodic boundary rules") {
  auto f = CompactKernel::box(1, 0.25);
  PointSet pts = scaled_points_1d({-0.49, 0.49}, 0.1);

  HermitianMatrix plain =
      build_scaled_kernel_matrix(f, pts, BoundaryRule::PlainDifference);
  HermitianMatrix wrapped =
      build_scaled_kernel_matrix(f, pts, BoundaryRule::PeriodicExtension);

  // Raw separation 0.98 is far outside the support; wrapped separation is
  // 0.02, which lands at 0.2 delta units, inside the box.
  CHECK(plain.real()(0, 1) == 0.0);
  CHECK(wrapped.real()(0, 1) == 1.0);
  CHECK(plain.real()(0, 0) == 1.0);
  CHECK(wrapped.real()(0, 0) == 1.0);
}

TEST_CASE("scaled builder agrees with direct kernel calls on sampled points") {
  auto f = CompactKernel::box(2, 0.25);
  PointSet pts = sample_for_scaled_model(50, 2, 2.0, 13);
  HermitianMatrix B =
      build_scaled_kernel_matrix(f, pts, BoundaryRule::PlainDifference);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      double m = 0.0;
      for (int a = 0; a < 2; ++a) {
        double t =
            std::abs(pts.coords(a, i) - pts.coords(a, j)) / pts.delta;
        m = std::max(m, t);
      }
      CHECK(B.real()(i, j) == (m <= 0.25 ? 1.0 : 0.0));
    }
}

TEST_CASE("builders validate model, dimension, and parameters") {
  auto F = PeriodicKernel::box(1, 0.25);
  auto f = CompactKernel::box(1, 0.25);
  PointSet torus = sample_torus(8, 1, 3);
  PointSet scaled = sample_for_scaled_model(8, 1, 1.0, 3);
  PointSet torus2 = sample_torus(8, 2, 3);

  CHECK_THROWS_AS(build_fixed_kernel_matrix(F, scaled), std::invalid_argument);
  CHECK_THROWS_AS(build_fixed_kernel_matrix(F, torus2), std::invalid_argument);
  CHECK_THROWS_AS(build_scaled_kernel_matrix(f, torus,
                                             BoundaryRule::PlainDifference),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_centered_matrix(F, scaled), std::invalid_argument);
  CHECK_THROWS_AS(build_row_sum_deformed(F, scaled, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_geometric_adjacency(torus, 0.0, RadiusScale::Raw),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      build_geometric_adjacency(torus, 1.0, RadiusScale::ScaledByDelta),
      std::invalid_argument);

  auto mode = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 2));
  CHECK_THROWS_AS(build_row_sum_deformed(mode, torus, 1.0),
                  std::invalid_argument);

  HermitianMatrix A = build_fixed_kernel_matrix(
      PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 1)), torus);
  CHECK_THROWS_AS(max_degree(A), std::invalid_argument);
}

TEST_CASE("binary round trip preserves entries and the hermitian flag") {
  SUBCASE("real symmetric") {
    auto F = PeriodicKernel::box(1, 0.25);
    PointSet pts = sample_torus(17, 1, 9);
    HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
    std::stringstream buf;
    write_matrix_binary(A, buf);
    HermitianMatrix back = read_matrix_binary(buf);
    REQUIRE(back.is_real());
    CHECK(back.hermitian);
    CHECK((back.real().array() == A.real().array()).all());
  }

  SUBCASE("complex hermitian") {
    auto F = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 2));
    PointSet pts = sample_torus(11, 1, 9);
    HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
    std::stringstream buf;
    write_matrix_binary(A, buf);
    HermitianMatrix back = read_matrix_binary(buf);
    REQUIRE_FALSE(back.is_real());
    CHECK(back.hermitian);
    CHECK((back.cplx().array() == A.cplx().array()).all());
  }

  SUBCASE("general matrices read back with the flag down") {
    std::map<std::vector<int>, Complex> coeffs;
    coeffs[{1}] = Complex(0.0, -0.5);
    coeffs[{-1}] = Complex(0.0, 0.5);
    auto F = PeriodicKernel::fourier_series(1, coeffs);
    PointSet pts = torus_points_1d({-0.2, 0.1, 0.35});
    HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
    std::stringstream buf;
    write_matrix_binary(A, buf);
    HermitianMatrix back = read_matrix_binary(buf);
    REQUIRE(back.is_real());
    CHECK_FALSE(back.hermitian);
    CHECK((back.real().array() == A.real().array()).all());
  }

  SUBCASE("truncated stream is rejected") {
    std::stringstream buf;
    std::int64_t n = 5;
    buf.write(reinterpret_cast<const char*>(&n), sizeof n);
    std::uint8_t real_flag = 1;
    buf.write(reinterpret_cast<const char*>(&real_flag), sizeof real_flag);
    double one = 1.0;
    buf.write(reinterpret_cast<const char*>(&one), sizeof one);
    CHECK_THROWS_AS(read_matrix_binary(buf), std::runtime_error);
  }
}
