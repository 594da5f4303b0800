#pragma once

#include <Eigen/Dense>

#include "erm/kernel.hpp"
#include "erm/matrices.hpp"
#include "erm/pointset.hpp"

namespace erm {

// Eigenvalue extraction and the empirical spectral statistics built on it.
//
// Two normalization conventions coexist: fixed-kernel matrices on the torus
// have eigenvalues of order n and are read through lambda/n (DividedByN),
// while scaled-kernel matrices have order-one eigenvalues weighted 1/n each
// (Unit).  The sample stores raw eigenvalues; downstream operations apply
// the tag.

enum class Normalization { DividedByN, Unit };

struct SpectralSample {
  Eigen::VectorXd eigenvalues;  // ascending
  Normalization normalization = Normalization::DividedByN;
  Provenance provenance;

  int n() const { return static_cast<int>(eigenvalues.size()); }
};

struct EmpiricalMeasure {
  Eigen::VectorXd locations;
  Eigen::VectorXd weights;  // all positive
  double total_mass = 0.0;
};

// Full symmetric/hermitian eigensolve.  Every call checks the trace and
// squared-Frobenius identities against the eigenvalue sums and throws
// std::runtime_error carrying the matrix provenance if either drifts beyond
// solver roundoff.  With verify_extremes the eigenvectors are computed too
// and the residuals ||Hv - lambda v|| of the two extreme pairs are checked
// directly; this roughly doubles the cost, so it is off by default.
// Matrices with the hermitian flag down are rejected.
SpectralSample eigenvalues(const HermitianMatrix& H, Normalization tag,
                           bool verify_extremes = false);

// DividedByN: atoms at lambda_i/n, weight 1 each, total mass n.
// Unit: atoms at lambda_i, weight 1/n each, total mass 1.
EmpiricalMeasure empirical_measure(const SpectralSample& s);

// Total weight in the half-open interval [lo, hi).
double measure_count(const EmpiricalMeasure& mu, double lo, double hi);

// Sum of weight * location^m, m >= 1.
double measure_moment(const EmpiricalMeasure& mu, int m);

// max |lambda| and the gap between the two largest eigenvalues, both after
// the normalization tag is applied.  The gap needs n >= 2.
double spectral_radius(const SpectralSample& s);
double spectral_gap(const SpectralSample& s);

// ||A_n Phi_k - Fhat(k) Phi_k||_p with A_n the 1/n-scaled fixed-kernel
// matrix and Phi_k the plane-wave vector (e^{2 pi i k.X_j})_j.  Computed
// from direct row sums, no eigensolve: the residual vector has entries
// Phi_i (s_i - Fhat(k)) with s_i = (1/n) sum_j F(X_i-X_j) e^{-2 pi i k.(X_i-X_j)},
// and |Phi_i| = 1 drops out of every entrywise norm.  p is 2, larger finite
// values, or infinity.
double eigenvector_residual(const PeriodicKernel& F, const PointSet& pts,
                            const Eigen::VectorXi& k, double p);

}  // namespace erm
