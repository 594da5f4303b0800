#pragma once

#include <cstdint>
#include <functional>

namespace erm {

// Numerical integration used by the kernel and theory modules.  Two schemes
// cover everything in the project:
//
//  * tensor midpoint rules for low total dimension, with an error estimate
//    from Richardson halving (the midpoint rule is second order, so the
//    extrapolated error of the fine grid is |I_N - I_{N/2}| / 3);
//  * randomized Halton sequences for higher dimension, with the spread of
//    independent Cranley-Patterson shifts as the error estimate.
//
// Integrands receive a raw pointer to `dim` coordinates; both drivers keep
// the evaluation loop allocation-free.

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
};

using Integrand = std::function<double(const double*)>;

// Midpoint rule over [-half_width, half_width]^dim with nodes_per_axis
// nodes per axis.  Plain single-grid value, no error estimate.
double midpoint_value(int dim, int nodes_per_axis, double half_width,
                      const Integrand& f);

// Fine grid plus half-resolution companion for the Richardson estimate.
Estimate midpoint_integrate(int dim, int nodes_per_axis, double half_width,
                            const Integrand& f);

// Randomized quasi-Monte Carlo over [-half_width, half_width]^dim:
// `shifts` independently shifted Halton streams of `samples` points each.
// The reported error is the standard error over the shifts.
Estimate qmc_integrate(int dim, std::int64_t samples, int shifts,
                       std::uint64_t seed, double half_width,
                       const Integrand& f);

// Per-axis resolutions and sample counts for the drivers above, as used by
// Fourier quadratures and the moment expansions.  Tensor grids are used up
// to total dimension 3; beyond that the integrals switch to QMC.
struct QuadratureSpec {
  int nodes_1d = 4096;
  int nodes_2d = 512;
  int nodes_3d = 128;
  std::int64_t qmc_samples = 1 << 16;
  int qmc_shifts = 8;
  std::uint64_t qmc_seed = 0x51a7e5eedULL;

  int nodes_for(int total_dim) const {
    return total_dim <= 1 ? nodes_1d : (total_dim == 2 ? nodes_2d : nodes_3d);
  }
  bool use_grid(int total_dim) const { return total_dim <= 3; }
};

Estimate integrate_box(int dim, double half_width, const QuadratureSpec& spec,
                       const Integrand& f);

}  // namespace erm
