#include "erm/pointset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "erm/common.hpp"

namespace erm {

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = hw > 0 ? hw : 1;
  threads = std::min(threads, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string PointSet::model_tag() const {
  if (model == Model::Torus) return "torus";
  std::ostringstream os;
  os << "scaled_cube(delta=" << delta << ",gamma=" << gamma << ")";
  return os.str();
}

PointSet sample_torus(int n, int d, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_torus: n must be >= 1");
  if (d < 1) throw std::invalid_argument("sample_torus: d must be >= 1");
  PointSet pts;
  pts.coords.resize(d, n);
  pts.seed = seed;
  std::mt19937_64 rng(seed);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) pts.coords(i, j) = uniform01(rng) - 0.5;
  return pts;
}

PointSet sample_for_scaled_model(int n, int d, double gamma, std::uint64_t seed) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("sample_for_scaled_model: gamma must be > 0");
  PointSet pts = sample_torus(n, d, seed);
  pts.model = Model::ScaledCube;
  pts.gamma = gamma;
  pts.delta = std::pow(gamma / static_cast<double>(n), 1.0 / static_cast<double>(d));
  if (!(pts.delta > 0.0 && pts.delta <= 1.0))
    throw std::invalid_argument(
        "sample_for_scaled_model: delta = (gamma/n)^(1/d) falls outside (0, 1]; "
        "increase n or decrease gamma");
  return pts;
}

Eigen::VectorXd torus_diff(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("torus_diff: dimension mismatch");
  Eigen::VectorXd w(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) w[i] = wrap_unit(x[i] - y[i]);
  return w;
}

double torus_norm(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double w = wrap_unit(x[i]);
    s += w * w;
  }
  return std::sqrt(s);
}

void write_points_csv(const PointSet& pts, std::ostream& out) {
  const int d = pts.dim();
  for (int i = 0; i < d; ++i) out << (i ? ",x" : "x") << (i + 1);
  out << "\n";
  char buf[32];
  for (int j = 0; j < pts.n(); ++j) {
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", pts.coords(i, j));
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

PointSet read_points_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_points_csv: empty input");
  int d = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int got = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell));
      ++got;
    }
    if (got != d)
      throw std::runtime_error("read_points_csv: ragged row (expected " +
                               std::to_string(d) + " columns)");
  }
  int n = static_cast<int>(values.size()) / d;
  if (n == 0) throw std::runtime_error("read_points_csv: no data rows");
  PointSet pts;
  pts.coords.resize(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) pts.coords(i, j) = values[j * d + i];
  return pts;
}

}  // namespace erm
