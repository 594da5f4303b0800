#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

#include "erm/kernel.hpp"
#include "erm/pointset.hpp"

namespace erm {

// Matrix models built from a point set and a kernel.  Entries depend only on
// coordinate differences, so every builder evaluates the kernel once per
// unordered pair and mirrors, making the stored matrix exactly hermitian.
// Real-valued kernels get real symmetric storage and the real eigensolver.

enum class BoundaryRule {
  PlainDifference,   // entry f((X_i - X_j) / delta)
  PeriodicExtension  // wrap the difference first: the periodized variant
};

enum class RadiusScale { Raw, ScaledByDelta };

struct Provenance {
  std::string kernel_id;
  std::string model_tag;
  std::string builder;
  std::uint64_t seed = 0;
  int n = 0;
};

struct HermitianMatrix {
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> data;
  Provenance provenance;
  // False only when a builder was handed a non-hermitian kernel; such
  // matrices are carried as general matrices and rejected by eigensolves.
  bool hermitian = true;

  bool is_real() const { return data.index() == 0; }
  const Eigen::MatrixXd& real() const { return std::get<0>(data); }
  const Eigen::MatrixXcd& cplx() const { return std::get<1>(data); }
  int order() const {
    return static_cast<int>(is_real() ? real().rows() : cplx().rows());
  }
  Complex entry(int i, int j) const {
    return is_real() ? Complex(real()(i, j), 0.0) : cplx()(i, j);
  }
  double trace_real() const;
  double frobenius_sq() const;
};

// entry(i,j) = F(X_i - X_j) on the torus; diagonal F(0).
HermitianMatrix build_fixed_kernel_matrix(const PeriodicKernel& F,
                                          const PointSet& pts);

// entry(i,j) = f((X_i - X_j)/delta), with the difference either taken raw in
// the unit cube or wrapped to the torus first (periodic extension).
HermitianMatrix build_scaled_kernel_matrix(const CompactKernel& f,
                                           const PointSet& pts,
                                           BoundaryRule boundary);

// 0/1 matrix with zero diagonal; entry 1 iff the pair is within `radius`
// (times delta under ScaledByDelta).  Torus metric for torus point sets,
// plain Euclidean for the scaled model.
HermitianMatrix build_geometric_adjacency(const PointSet& pts, double radius,
                                          RadiusScale scale);

// A - u * diag(row sums of A); u = 1 gives zero row sums.  Requires a
// real-valued kernel so the deformed diagonal stays real.
HermitianMatrix build_row_sum_deformed(const PeriodicKernel& F,
                                       const PointSet& pts, double u);

// A - F(0) I: zero diagonal, the centered matrix of the correlation
// functionals.
HermitianMatrix build_centered_matrix(const PeriodicKernel& F,
                                      const PointSet& pts);

// Largest row sum of a 0/1 adjacency matrix, as an integer.
int max_degree(const HermitianMatrix& adjacency);

// Binary dump: int64 order, uint8 is_real, then row-major entries as doubles
// (re,im interleaved in the complex case).  Layout for external inspection,
// not a compatibility promise.
void write_matrix_binary(const HermitianMatrix& H, std::ostream& out);
HermitianMatrix read_matrix_binary(std::istream& in);

}  // namespace erm
