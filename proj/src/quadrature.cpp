#include "erm/quadrature.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "erm/common.hpp"

namespace erm {

namespace {

// Odometer walk over the tensor grid; x holds the current node coordinates.
double midpoint_sum(int dim, int n, double h, double lo, const Integrand& f) {
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim);
  for (int i = 0; i < dim; ++i) x[i] = lo + 0.5 * h;
  double cell = std::pow(h, dim);
  double sum = 0.0;
  for (;;) {
    sum += f(x.data());
    int a = 0;
    while (a < dim) {
      if (++idx[a] < n) {
        x[a] = lo + (idx[a] + 0.5) * h;
        break;
      }
      idx[a] = 0;
      x[a] = lo + 0.5 * h;
      ++a;
    }
    if (a == dim) break;
  }
  return sum * cell;
}

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

double midpoint_value(int dim, int nodes_per_axis, double half_width,
                      const Integrand& f) {
  if (dim < 1 || nodes_per_axis < 1)
    throw std::invalid_argument("midpoint_value: dim and nodes must be >= 1");
  if (!(half_width > 0.0))
    throw std::invalid_argument("midpoint_value: half_width must be > 0");
  double h = 2.0 * half_width / nodes_per_axis;
  return midpoint_sum(dim, nodes_per_axis, h, -half_width, f);
}

Estimate midpoint_integrate(int dim, int nodes_per_axis, double half_width,
                            const Integrand& f) {
  if (nodes_per_axis < 2)
    throw std::invalid_argument(
        "midpoint_integrate: need nodes >= 2 for the refinement estimate");
  int coarse = std::max(1, nodes_per_axis / 2);
  double fine = midpoint_value(dim, nodes_per_axis, half_width, f);
  double half = midpoint_value(dim, coarse, half_width, f);
  Estimate e;
  e.value = fine;
  e.error = std::abs(fine - half) / 3.0;
  if (!std::isfinite(fine) || !std::isfinite(half))
    throw std::runtime_error("midpoint_integrate: non-finite quadrature value");
  return e;
}

Estimate qmc_integrate(int dim, std::int64_t samples, int shifts,
                       std::uint64_t seed, double half_width,
                       const Integrand& f) {
  if (dim < 1 || dim > static_cast<int>(sizeof(kPrimes) / sizeof(int)))
    throw std::invalid_argument("qmc_integrate: dimension out of range");
  if (samples < 2 || shifts < 2)
    throw std::invalid_argument("qmc_integrate: need samples >= 2, shifts >= 2");
  double volume = std::pow(2.0 * half_width, dim);
  std::vector<double> x(dim), shift(dim), means;
  means.reserve(shifts);
  for (int s = 0; s < shifts; ++s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    for (int a = 0; a < dim; ++a) shift[a] = uniform01(rng);
    double sum = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
      for (int a = 0; a < dim; ++a) {
        double u = radical_inverse(static_cast<std::uint64_t>(i) + 1, kPrimes[a]) + shift[a];
        if (u >= 1.0) u -= 1.0;
        x[a] = (u - 0.5) * 2.0 * half_width;
      }
      sum += f(x.data());
    }
    means.push_back(volume * sum / static_cast<double>(samples));
  }
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= shifts;
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  var /= (shifts - 1);
  Estimate e;
  e.value = mean;
  e.error = std::sqrt(var / shifts);
  if (!std::isfinite(mean))
    throw std::runtime_error("qmc_integrate: non-finite quadrature value");
  return e;
}

Estimate integrate_box(int dim, double half_width, const QuadratureSpec& spec,
                       const Integrand& f) {
  if (spec.use_grid(dim))
    return midpoint_integrate(dim, spec.nodes_for(dim), half_width, f);
  return qmc_integrate(dim, spec.qmc_samples, spec.qmc_shifts, spec.qmc_seed,
                       half_width, f);
}

}  // namespace erm
