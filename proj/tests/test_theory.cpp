#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "erm/common.hpp"
#include "erm/kernel.hpp"
#include "erm/matrices.hpp"
#include "erm/pointset.hpp"
#include "erm/quadrature.hpp"
#include "erm/theory.hpp"

using namespace erm;

namespace {

constexpr double kPi = std::numbers::pi;

// complex hermitian compact kernel: even real part, odd imaginary part
CompactKernel twisted_box() {
  auto eval = [](const Eigen::VectorXd& x) -> Complex {
    if (std::abs(x[0]) > 0.25) return {0.0, 0.0};
    return {1.0, 0.5 * std::sin(4.0 * kPi * x[0])};
  };
  return CompactKernel::custom(1, eval, true, false, 0.25);
}

}  // namespace

TEST_CASE("limit measure of the box kernel lists the exact coefficients") {
  auto F = PeriodicKernel::box(1, 0.25);
  AtomicMeasure mu = limit_measure(F, 2);

  REQUIRE(mu.values.size() == 5);
  CHECK(mu.cutoff == 2);
  std::map<int, double> by_mode;
  for (int i = 0; i < 5; ++i) by_mode[mu.modes(0, i)] = mu.values[i];
  CHECK(by_mode[0] == 0.5);
  CHECK(by_mode[1] == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(by_mode[-1] == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(by_mode[2] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(by_mode[-2] == doctest::Approx(0.0).epsilon(1e-14));

  double expected_tail = 0.5 - 0.25 - 2.0 / (kPi * kPi);
  CHECK(mu.tail_bound == doctest::Approx(expected_tail).epsilon(1e-12));
}

TEST_CASE("limit measure of a single mode has one unit atom") {
  auto F = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 2));
  AtomicMeasure mu = limit_measure(F, 3);
  int nonzero = 0;
  for (int i = 0; i < mu.values.size(); ++i)
    if (std::abs(mu.values[i]) > 1e-14) {
      ++nonzero;
      CHECK(mu.modes(0, i) == 2);
      CHECK(mu.values[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
  CHECK(nonzero == 1);
  CHECK(mu.tail_bound == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("outer-shell atom magnitude decays as the cutoff grows") {
  auto F = PeriodicKernel::box(1, 0.25);
  auto shell_max = [&](int K) {
    AtomicMeasure mu = limit_measure(F, K);
    double m = 0.0;
    for (int i = 0; i < mu.values.size(); ++i)
      if (std::abs(mu.modes(0, i)) == K)
        m = std::max(m, std::abs(mu.values[i]));
    return m;
  };
  // odd shells avoid the indicator's coefficient zeros
  CHECK(shell_max(1) > shell_max(3));
  CHECK(shell_max(3) > shell_max(9));
  CHECK(shell_max(9) > shell_max(27));
}

TEST_CASE("atom-sum moments hit the inversion and Parseval values") {
  auto F = PeriodicKernel::box(1, 0.25);

  SUBCASE("first moment approaches the kernel at zero, with a decay warning") {
    MomentReport r = mu_moment(F, 1, 2000);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_FALSE(r.warning.empty());
  }
  SUBCASE("second moment approaches the squared norm") {
    MomentReport r = mu_moment(F, 2, 400);
    CHECK(r.value == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(r.warning.empty());
    CHECK(r.error_estimate >= 0.0);
  }
  SUBCASE("even moments increase monotonically in the cutoff") {
    double a = mu_moment(F, 2, 50).value;
    double b = mu_moment(F, 2, 100).value;
    double c = mu_moment(F, 2, 400).value;
    CHECK(a < b);
    CHECK(b < c);
    CHECK(c < 0.5 + 1e-12);
  }
  SUBCASE("single-mode kernel has unit moments of every order") {
    auto P = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 3));
    for (int m : {1, 2, 5})
      CHECK(mu_moment(P, m, 4).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("finite series kernels raise no decay warning") {
    std::map<std::vector<int>, Complex> c;
    c[{0}] = 1.0;
    c[{1}] = 0.5;
    c[{-1}] = 0.5;
    auto G = PeriodicKernel::fourier_series(1, c);
    CHECK(mu_moment(G, 1, 64).warning.empty());
  }
  SUBCASE("atom order does not matter") {
    AtomicMeasure mu = limit_measure(F, 30);
    double direct = mu_moment(mu, 2).value;
    // reverse the atom order in place
    mu.modes.rowwise().reverseInPlace();
    mu.values.reverseInPlace();
    CHECK(mu_moment(mu, 2).value == doctest::Approx(direct).epsilon(1e-15));
  }
}

TEST_CASE("order-1/n moment correction has its closed-form box values") {
  auto F = PeriodicKernel::box(1, 0.25);
  // m=2: mu(P1)^2 - mu(P2) = 1 - 0.5
  CHECK(finite_size_correction(F, 2, 2000) ==
        doctest::Approx(0.5).epsilon(5e-3));
  // single mode: 1 - 1 = 0
  auto P = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 1));
  CHECK(finite_size_correction(P, 2, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(finite_size_correction(F, 1, 10), std::invalid_argument);
}

TEST_CASE("finite series corrections are exact at tiny cutoffs") {
  // F = 1 + cos(2 pi x): atoms {1, 0.5, 0.5}
  std::map<std::vector<int>, Complex> c;
  c[{0}] = 1.0;
  c[{1}] = 0.5;
  c[{-1}] = 0.5;
  auto G = PeriodicKernel::fourier_series(1, c);
  // moments: mu1 = 2, mu2 = 1.5, mu3 = 1.25
  CHECK(finite_size_correction(G, 2, 4) ==
        doctest::Approx(4.0 - 1.5).epsilon(1e-12));
  CHECK(finite_size_correction(G, 3, 4) ==
        doctest::Approx(3.0 * 2.0 * 1.5 - 3.0 * 1.25).epsilon(1e-12));
}

TEST_CASE("third-moment correction matches the 1/n slope of simulated traces") {
  // E mu_n(P3) = mu(P3) + correction/n + O(1/n^2); extract the slope from
  // the exact trace of A^3 at two sizes and compare.  tr A^3 needs no
  // eigensolve.
  auto F = PeriodicKernel::box(1, 0.25);
  const double predicted = finite_size_correction(F, 3, 4000);

  auto mean_p3 = [&](int n, std::uint64_t base, int reps, double* var_out) {
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      PointSet pts = sample_torus(n, 1, derive_seed(base, r));
      HermitianMatrix A = build_fixed_kernel_matrix(F, pts);
      const Eigen::MatrixXd& a = A.real();
      double tr3 = (a * a).cwiseProduct(a).sum();
      double p3 = tr3 / std::pow(static_cast<double>(n), 3);
      sum += p3;
      sum_sq += p3 * p3;
    }
    double mean = sum / reps;
    *var_out = (sum_sq - reps * mean * mean) / (reps - 1);
    return mean;
  };

  const int reps = 2500;
  double var_a = 0.0, var_b = 0.0;
  double mean_a = mean_p3(50, 0xa11ce, reps, &var_a);
  double mean_b = mean_p3(100, 0xb0b5, reps, &var_b);
  double slope = (mean_a - mean_b) / (1.0 / 50.0 - 1.0 / 100.0);
  double slope_se =
      std::sqrt(var_a / reps + var_b / reps) / (1.0 / 50.0 - 1.0 / 100.0);
  CHECK(std::abs(slope - predicted) < 3.0 * slope_se + 0.02);
}

TEST_CASE("density moments reproduce the box closed forms") {
  auto f = CompactKernel::box(1, 0.25);

  SUBCASE("first moment is the kernel at zero") {
    MomentReport r = nu_gamma_moment(f, 2.0, 1);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("second moment is 1 + gamma/2") {
    for (double g : {0.5, 1.0, 2.0}) {
      MomentReport r = nu_gamma_moment(f, g, 2);
      CHECK(r.value == doctest::Approx(1.0 + 0.5 * g).epsilon(0.01));
      REQUIRE(r.breakdown.size() == 2);
      CHECK(r.breakdown[0] == 1.0);
      CHECK(r.breakdown[1] == doctest::Approx(0.5 * g).epsilon(0.01));
    }
  }
  SUBCASE("third moment is 1 + 1.5 gamma + 0.1875 gamma^2") {
    for (double g : {0.5, 1.0, 2.0}) {
      MomentReport r = nu_gamma_moment(f, g, 3);
      double expect = 1.0 + 1.5 * g + 0.1875 * g * g;
      CHECK(r.value == doctest::Approx(expect).epsilon(0.01));
      double block_sum = 0.0;
      for (double b : r.breakdown) block_sum += b;
      CHECK(block_sum == doctest::Approx(r.value).epsilon(1e-14));
    }
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(nu_gamma_moment(f, 0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(nu_gamma_moment(f, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(nu_gamma_moment(f, 1.0, kMomentCap + 1),
                    std::invalid_argument);
  }
}

TEST_CASE("top surjection block equals the convolution-power prediction") {
  auto f = CompactKernel::box(1, 0.25);
  for (int m : {2, 3, 4}) {
    const double gamma = 1.5;
    MomentReport r = nu_gamma_moment(f, gamma, m);
    double leading = std::pow(gamma, m - 1) *
                     convolution_power_at_zero(f, m).value;
    CHECK(r.breakdown[m - 1] == doctest::Approx(leading).epsilon(0.01));
  }
}

TEST_CASE("three routes to the moment coefficients agree for the box") {
  auto f = CompactKernel::box(1, 0.25);
  MomentReport r = nu_gamma_moment(f, 1.0, 3);
  REQUIRE(r.breakdown.size() == 3);
  // constant block against the direct power of f(0)
  CHECK(r.breakdown[0] == doctest::Approx(1.0).epsilon(1e-12));
  // middle block against the second-order coefficient route
  CHECK(r.breakdown[1] ==
        doctest::Approx(second_order_term(f, 1.0, 3)).epsilon(0.01));
  // leading block against the high-density route
  CHECK(r.breakdown[2] ==
        doctest::Approx(high_density_moment(f, 1.0, 3)).epsilon(0.01));
}

TEST_CASE("complex hermitian kernels integrate through the two-pass path") {
  CompactKernel f = twisted_box();
  // |f|^2 integrates to 0.5 + 0.25 * 0.25
  for (double g : {1.0, 3.0}) {
    MomentReport r = nu_gamma_moment(f, g, 2);
    CHECK(r.value == doctest::Approx(1.0 + 0.5625 * g).epsilon(0.01));
  }
  // the single three-block chain integral is real; the imaginary residue
  // lands in the error estimate and stays small
  MomentReport r3 = nu_gamma_moment(f, 1.0, 3);
  CHECK(std::isfinite(r3.value));
  CHECK(r3.error_estimate < 0.1);
}

TEST_CASE("density moments are Lipschitz in gamma at the closed-form rate") {
  auto f = CompactKernel::box(1, 0.25);
  const double h = 0.25;
  for (double g : {0.5, 1.0, 2.0}) {
    double d2 = nu_gamma_moment(f, g + h, 2).value - nu_gamma_moment(f, g, 2).value;
    CHECK(std::abs(d2) <= 1.05 * 0.5 * h);
    double d3 = nu_gamma_moment(f, g + h, 3).value - nu_gamma_moment(f, g, 3).value;
    double rate3 = 1.5 + 0.1875 * (2.0 * g + h);
    CHECK(std::abs(d3) <= 1.05 * rate3 * h);
  }
}

TEST_CASE("high-density route scales convolution powers by gamma") {
  auto f = CompactKernel::box(1, 0.25);
  CHECK(high_density_moment(f, 10.0, 3) == doctest::Approx(18.75).epsilon(1e-9));
  CHECK(high_density_moment(f, 7.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(high_density_moment(f, 1000.0, 3) ==
        doctest::Approx(187500.0).epsilon(1e-9));

  // closed-form ratio at gamma = 1000, m = 3
  double ratio = nu_gamma_moment(f, 1000.0, 3).value /
                 high_density_moment(f, 1000.0, 3);
  CHECK(ratio == doctest::Approx((1.0 + 1500.0 + 187500.0) / 187500.0)
                     .epsilon(0.01));
}

TEST_CASE("second-order coefficient matches its closed forms") {
  auto f = CompactKernel::box(1, 0.25);
  CHECK(second_order_term(f, 4.0, 3) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(second_order_term(f, 9.0, 2) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(second_order_term(f, 1.0, 1), std::invalid_argument);

  // kernel vanishing at the origin kills the m = 2 term
  auto g = CompactKernel::custom(
      1,
      [](const Eigen::VectorXd& x) -> Complex {
        if (std::abs(x[0]) > 0.25) return {0.0, 0.0};
        double s = std::sin(2.0 * kPi * x[0]);
        return {s * s, 0.0};
      },
      true, true, 0.25);
  CHECK(second_order_term(g, 5.0, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Poisson tail bound solves the sandwich") {
  SUBCASE("reference point n=100, gamma=1") {
    PoissonBound b = poisson_bound_j(100, 1.0);
    CHECK(b.j == 4);
    CHECK_FALSE(b.degenerate);
    CHECK(100.0 * b.tail_above_j <= 1.0);
    CHECK(100.0 * b.tail_at_j > 1.0);
  }
  SUBCASE("exact tail values") {
    CHECK(poisson_upper_tail(1, 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    double p_ge5 = 1.0 - std::exp(-1.0) * (1.0 + 1.0 + 0.5 + 1.0 / 6.0 + 1.0 / 24.0);
    CHECK(poisson_upper_tail(5, 1.0) == doctest::Approx(p_ge5).epsilon(1e-10));
    CHECK(poisson_upper_tail(0, 2.0) == 1.0);
  }
  SUBCASE("threshold is nondecreasing in n") {
    int prev = 0;
    for (std::int64_t n : {100, 1000, 10000, 100000}) {
      int j = poisson_bound_j(n, 1.0).j;
      CHECK(j >= prev);
      prev = j;
    }
  }
  SUBCASE("asymptotic ceiling at large n") {
    for (std::int64_t n : {std::int64_t(1000000), std::int64_t(100000000),
                           std::int64_t(1000000000)}) {
      PoissonBound b = poisson_bound_j(n, 1.0);
      double cap = 3.0 * std::log(static_cast<double>(n)) /
                   std::log(std::log(static_cast<double>(n)));
      CHECK(b.j <= cap);
    }
  }
  SUBCASE("n = 1 has no strict lower side") {
    PoissonBound b = poisson_bound_j(1, 1.0);
    CHECK(b.j == 0);
    CHECK(b.degenerate);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(poisson_bound_j(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(poisson_bound_j(10, 0.0), std::invalid_argument);
  }
}

TEST_CASE("two-point correlation is minus the squared norm") {
  CHECK(correlation_M2(PeriodicKernel::box(1, 0.25)) ==
        doctest::Approx(-0.5).epsilon(1e-12));

  std::map<std::vector<int>, Complex> c;
  c[{0}] = 1.0;
  c[{1}] = 0.5;
  c[{-1}] = 0.5;
  CHECK(correlation_M2(PeriodicKernel::fourier_series(1, c)) ==
        doctest::Approx(-1.5).epsilon(1e-12));

  // doubling the kernel quadruples the magnitude
  auto doubled = PeriodicKernel::custom(
      1,
      [](const Eigen::VectorXd& x) -> Complex {
        double w = x[0] - std::floor(x[0] + 0.5);
        return {std::abs(w) <= 0.25 ? 2.0 : 0.0, 0.0};
      },
      true, true);
  CHECK(correlation_M2(doubled) == doctest::Approx(-2.0).epsilon(5e-3));

  CHECK_THROWS_AS(
      correlation_M2(PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 1))),
      std::invalid_argument);
}

TEST_CASE("sampled determinant correlations match their oracles") {
  auto F = PeriodicKernel::box(1, 0.25);
  const std::int64_t N = 200000;

  SUBCASE("pair functional against the closed form") {
    McEstimate e = correlation_Mm_mc(F, 2, 1, N, 0xfeed);
    CHECK(std::abs(e.mean - (-0.5)) < 4.0 * e.se);
    CHECK(e.se > 0.0);
    CHECK(e.se < 0.01);
  }
  SUBCASE("triple functional against a grid quadrature oracle") {
    Integrand g = [&F](const double* x) {
      Eigen::VectorXd u(1), v(1), w(1);
      u << x[0];
      v << x[1];
      w << x[0] + x[1];
      return (F(u) * F(v) * F(w)).real();
    };
    Estimate grid = midpoint_integrate(2, 512, 0.5, g);
    double oracle = 2.0 * grid.value;
    CHECK(oracle == doctest::Approx(0.375).epsilon(0.01));

    McEstimate e = correlation_Mm_mc(F, 3, 1, N, 0xbeef);
    CHECK(std::abs(e.mean - oracle) < 4.0 * e.se + 0.005);
  }
  SUBCASE("squared pair determinant averages the fourth power") {
    // det^2 = F^4 and the indicator's fourth power is itself
    McEstimate e = correlation_Mm_mc(F, 2, 2, N, 0xcafe);
    CHECK(std::abs(e.mean - 0.5) < 4.0 * e.se);
  }
  SUBCASE("single-mode kernel gives a zero-variance pair determinant") {
    auto P = PeriodicKernel::pure_mode(Eigen::VectorXi::Constant(1, 2));
    McEstimate e = correlation_Mm_mc(P, 2, 1, 1000, 0x5eed);
    CHECK(e.mean == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(e.se < 1e-12);
  }
  SUBCASE("seeds pin the estimate down") {
    McEstimate a = correlation_Mm_mc(F, 2, 1, 5000, 42);
    McEstimate b = correlation_Mm_mc(F, 2, 1, 5000, 42);
    CHECK(a.mean == b.mean);
    McEstimate c = correlation_Mm_mc(F, 2, 1, 5000, 43);
    CHECK(a.mean != c.mean);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(correlation_Mm_mc(F, 1, 1, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(correlation_Mm_mc(F, 2, 0, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(correlation_Mm_mc(F, 2, 1, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("limit measure rejects bad cutoffs and non-hermitian kernels") {
  auto F = PeriodicKernel::box(1, 0.25);
  CHECK_THROWS_AS(limit_measure(F, -1), std::invalid_argument);
  std::map<std::vector<int>, Complex> odd;
  odd[{1}] = Complex(0.0, -0.5);
  odd[{-1}] = Complex(0.0, 0.5);
  auto G = PeriodicKernel::fourier_series(1, odd);
  CHECK_THROWS_AS(limit_measure(G, 2), std::invalid_argument);
  CHECK_THROWS_AS(mu_moment(F, 0, 4), std::invalid_argument);
}
