#pragma once

#include <cstdint>
#include <vector>

namespace erm {

// Surjections {1,...,m} -> {1,...,p} up to relabeling of the target.  The
// trace-power expansions sum over all of them, but the summand only depends
// on the induced partition of positions, so we enumerate one canonical
// representative per class and weight it by the class size p!.
//
// Canonical means first-occurrence order: scanning the string left to right,
// the values 1,...,p make their first appearance in increasing order.  These
// are exactly the restricted-growth strings on p values.

struct SurjectionClass {
  std::vector<int> representative;  // length m, values in {1,...,p}
  std::uint64_t class_size = 0;     // p!
  int m = 0;
  int p = 0;
};

// Enumeration cap.  The class count for fixed m totals the Bell number
// B(m); B(12) = 4,213,597 classes of length 12 is ~400 MB-free territory,
// B(13) quadruples it.
inline constexpr int kSurjectionCap = 12;

// All S(m,p) canonical classes, lexicographically ordered.
std::vector<SurjectionClass> enumerate_surjection_classes(int m, int p);

// Stirling numbers of the second kind by the standard recurrence
// S(m,p) = p S(m-1,p) + S(m-1,p-1).  Exact in 64 bits for m <= 25, which is
// far beyond the enumeration cap; larger m is rejected rather than silently
// overflowed.
std::uint64_t stirling2(int m, int p);

// p! in 64 bits, p <= 20.
std::uint64_t factorial(int p);

}  // namespace erm
