#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace erm {

inline constexpr const char* kVersion = "0.1.0";

// ---- seeding ----------------------------------------------------------
//
// Every random stream in the project is derived from a 64-bit master seed
// and a stream index through splitmix64.  The rule is fixed so that a run
// distributed over K workers draws exactly the same realizations as a
// serial run: realization r always uses derive_seed(master, r), no matter
// which worker executes it.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = splitmix64(master ^ 0x9e3779b97f4a7c15ULL);
  return splitmix64(s + 0x632be59bd9b4e019ULL * (stream + 1));
}

// Uniform double in [0,1) with the full 53-bit mantissa.  mt19937_64 output
// is specified by the standard, so samples are identical across platforms.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---- worker pool -------------------------------------------------------

// Runs fn(i) for i in [0, count).  threads = 0 picks hardware concurrency.
// Work items are claimed from an atomic counter; callers that need ordered
// output should write into a preallocated slot per index.  The first
// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace erm
