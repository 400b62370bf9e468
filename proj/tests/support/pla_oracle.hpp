#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lidx/pla/pla.hpp"

namespace lidx::testing {

// Minimal number of ε-feasible contiguous segments, by dynamic programming
// over feasible intervals. For every end j the smallest feasible start lo[j]
// is found with segment_feasible, then
//   best[j + 1] = 1 + min over i in [lo[j], j] of best[i].
// The min is taken explicitly rather than assuming best[] is monotone.
inline std::size_t dp_min_segments(std::span<const CdfPoint> points, std::uint64_t epsilon) {
  const std::size_t n = points.size();
  if (n == 0) {
    return 0;
  }
  std::vector<std::size_t> lo(n);
  std::size_t start = 0;
  for (std::size_t j = 0; j < n; ++j) {
    while (!pla::segment_feasible(points.subspan(start, j - start + 1), epsilon)) {
      ++start;
    }
    lo[j] = start;
  }
  std::vector<std::size_t> best(n + 1, std::numeric_limits<std::size_t>::max());
  best[0] = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t m = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = lo[j]; i <= j; ++i) {
      m = std::min(m, best[i]);
    }
    best[j + 1] = m + 1;
  }
  return best[n];
}

// Smallest achievable max |residual| over all lines, found by ternary search
// on the slope. The vertical width of the point set is convex in the slope,
// and the optimal slope lies between the smallest and largest slope of
// consecutive points.
inline long double min_max_residual(std::span<const CdfPoint> points) {
  if (points.size() <= 2) {
    return 0;
  }
  const long double x0 = static_cast<long double>(points.front().key);
  std::vector<long double> xs;
  std::vector<long double> ys;
  for (const auto& p : points) {
    xs.push_back(static_cast<long double>(p.key) - x0);
    ys.push_back(static_cast<long double>(p.rank));
  }
  long double lo = std::numeric_limits<long double>::max();
  long double hi = std::numeric_limits<long double>::lowest();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const long double s = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  auto width = [&](long double s) {
    long double top = std::numeric_limits<long double>::lowest();
    long double bottom = std::numeric_limits<long double>::max();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const long double v = ys[i] - s * xs[i];
      top = std::max(top, v);
      bottom = std::min(bottom, v);
    }
    return top - bottom;
  };
  for (int iter = 0; iter < 300; ++iter) {
    const long double a = lo + (hi - lo) / 3;
    const long double b = hi - (hi - lo) / 3;
    if (width(a) <= width(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return width((lo + hi) / 2) / 2;
}

}  // namespace lidx::testing
