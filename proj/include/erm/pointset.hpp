#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace erm {

// Point configurations on the unit torus Omega = [-1/2, 1/2)^d.  The seam is
// half-open by convention: canonical coordinates always lie in [-1/2, 1/2),
// which pins down behaviour at the (measure-zero) boundary.
//
// The density-gamma model is sampled on Omega as well; the kernel is scaled
// by delta instead of the points, which keeps one sampler and avoids large
// coordinates.  Such point sets carry model = Model::ScaledCube together
// with delta = (gamma/n)^(1/d).

enum class Model { Torus, ScaledCube };

struct PointSet {
  Eigen::MatrixXd coords;  // d x n, one column per point, entries in [-1/2, 1/2)
  Model model = Model::Torus;
  double delta = 0.0;   // ScaledCube only
  double gamma = 0.0;   // ScaledCube only
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(coords.cols()); }
  int dim() const { return static_cast<int>(coords.rows()); }
  std::string model_tag() const;
};

// Canonical representative of t mod 1 in [-1/2, 1/2).
inline double wrap_unit(double t) { return t - std::floor(t + 0.5); }

PointSet sample_torus(int n, int d, std::uint64_t seed);
PointSet sample_for_scaled_model(int n, int d, double gamma, std::uint64_t seed);

// Canonical representative of x - y mod Z^d, coordinates in [-1/2, 1/2).
Eigen::VectorXd torus_diff(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Euclidean norm of the canonical representative; at most sqrt(d)/2.
double torus_norm(const Eigen::VectorXd& x);

// CSV round trip, header "x1,...,xd", one row per point.
void write_points_csv(const PointSet& pts, std::ostream& out);
PointSet read_points_csv(std::istream& in);

}  // namespace erm
