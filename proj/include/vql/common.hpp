#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vql {

using cplx = std::complex<double>;

/// Thrown when an input exceeds a hard resource cap (e.g. qubit count).
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a numeric routine fails (non-finite values, failed eigensolve).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Fixed-shape reduction: per-block serial sums combined by a pairwise tree in
// block order. The result is independent of how blocks are assigned to
// threads, which is what makes reductions bit-stable under OpenMP.
inline constexpr std::size_t kReduceBlock = 4096;

template <typename T>
T tree_combine(std::vector<T>& parts) {
  if (parts.empty()) return T{};
  std::size_t count = parts.size();
  while (count > 1) {
    std::size_t half = (count + 1) / 2;
    for (std::size_t i = 0; i + half < count; ++i) parts[i] += parts[i + half];
    count = half;
  }
  return parts[0];
}

}  // namespace detail

/// Deterministic sum of f(i) for i in [0, count), bit-stable under any
/// internal thread count.
template <typename T, typename F>
T blocked_sum(std::size_t count, F&& f) {
  const std::size_t nblocks = (count + detail::kReduceBlock - 1) / detail::kReduceBlock;
  if (nblocks <= 1) {
    T acc{};
    for (std::size_t i = 0; i < count; ++i) acc += f(i);
    return acc;
  }
  std::vector<T> parts(nblocks, T{});
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * detail::kReduceBlock;
    const std::size_t hi = std::min(lo + detail::kReduceBlock, count);
    T acc{};
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    parts[static_cast<std::size_t>(b)] = acc;
  }
  return detail::tree_combine(parts);
}

}  // namespace vql
