#include "erm/combinatorics.hpp"

#include <algorithm>
#include <stdexcept>

namespace erm {

std::uint64_t factorial(int p) {
  if (p < 0 || p > 20)
    throw std::invalid_argument("factorial: need 0 <= p <= 20 for 64-bit range");
  std::uint64_t r = 1;
  for (int i = 2; i <= p; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t stirling2(int m, int p) {
  if (m < 0 || p < 0 || p > m)
    throw std::invalid_argument("stirling2: need 0 <= p <= m");
  if (m > 25)
    throw std::invalid_argument("stirling2: m > 25 exceeds the 64-bit range");
  // row-by-row recurrence, one row of length p+1
  std::vector<std::uint64_t> row(p + 1, 0);
  row[0] = 1;  // S(0,0)
  for (int i = 1; i <= m; ++i) {
    for (int j = std::min(i, p); j >= 1; --j)
      row[j] = static_cast<std::uint64_t>(j) * row[j] + row[j - 1];
    row[0] = 0;  // S(i,0) = 0 for i >= 1
  }
  return row[p];
}

std::vector<SurjectionClass> enumerate_surjection_classes(int m, int p) {
  if (m < 1 || p < 1 || p > m)
    throw std::invalid_argument(
        "enumerate_surjection_classes: need 1 <= p <= m");
  if (m > kSurjectionCap)
    throw std::invalid_argument(
        "enumerate_surjection_classes: m exceeds the enumeration cap");
  const std::uint64_t size = factorial(p);
  std::vector<SurjectionClass> out;
  out.reserve(static_cast<size_t>(stirling2(m, p)));

  // Depth-first over restricted-growth strings: position `pos` may take any
  // value up to one more than the maximum so far (capped at p).  Branches
  // that can no longer introduce enough new values to reach p are pruned.
  std::vector<int> s(m);
  auto rec = [&](auto&& self, int pos, int maxv) -> void {
    if (maxv + (m - pos) < p) return;
    if (pos == m) {
      SurjectionClass c;
      c.representative = s;
      c.class_size = size;
      c.m = m;
      c.p = p;
      out.push_back(std::move(c));
      return;
    }
    int cap = std::min(maxv + 1, p);
    for (int v = 1; v <= cap; ++v) {
      s[pos] = v;
      self(self, pos + 1, std::max(maxv, v));
    }
  };
  rec(rec, 0, 0);
  return out;
}

}  // namespace erm
