#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lidx/core/types.hpp"

namespace lidx::pla {

inline constexpr std::uint64_t kGlobalEpsilon = 4096;
inline constexpr std::uint64_t kLocalEpsilon = 32;

/// rank ≈ slope · (key − origin) + intercept.
///
/// Anchoring at `origin` keeps the subtraction exact for large keys, which a
/// plain slope · key + intercept form would not.
struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;
  Key origin = 0;

  double predict(Key key) const noexcept {
    const double dx = key >= origin ? static_cast<double>(key - origin)
                                    : -static_cast<double>(origin - key);
    return slope * dx + intercept;
  }

  /// Same as predict() but with extended precision, for residual checks.
  long double predict_precise(Key key) const noexcept {
    const long double dx = static_cast<long double>(key) - static_cast<long double>(origin);
    return static_cast<long double>(slope) * dx + static_cast<long double>(intercept);
  }
};

struct PlaSegment {
  std::uint64_t start_rank = 0;
  std::uint64_t count = 0;
  LinearModel model;
};

struct PlaSegmentation {
  std::uint64_t epsilon = 0;
  std::vector<PlaSegment> segments;

  std::size_t size() const noexcept { return segments.size(); }
};

struct HardnessProfile {
  std::size_t global_h = 0;
  std::size_t local_h = 0;

  friend bool operator==(const HardnessProfile&, const HardnessProfile&) = default;
};

/// Online ε-approximate line fitting over points with strictly increasing x.
///
/// Keeps the upper and lower convex hulls of the points shifted by ±ε and the
/// pair of extreme feasible lines. Every add is amortized O(1), and all
/// comparisons are exact integer arithmetic. A residual of exactly ε counts
/// as feasible.
class StreamingFitter {
 public:
  explicit StreamingFitter(std::uint64_t epsilon) : epsilon_(static_cast<std::int64_t>(epsilon)) {}

  enum class Placement { kKeyTooSmall, kFits, kKeyTooLarge };

  /// True if (x, y) can join the current segment. Requires x > last x.
  bool would_accept(Key x, std::uint64_t y) const noexcept { return place(x, y) == Placement::kFits; }

  /// Whether (x, y) fits, or on which side of the feasible key range it falls
  /// for rank y. For a fixed y the feasible keys form an interval, so
  /// kKeyTooLarge is monotone in x. Requires x > last x.
  Placement place(Key x, std::uint64_t y) const noexcept;

  /// Adds (x, y) if feasible. On failure nothing changes and false is returned.
  bool add(Key x, std::uint64_t y);

  void reset() noexcept { count_ = 0; }

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  Key first_key() const noexcept { return first_x_; }
  Key last_key() const noexcept { return last_x_; }
  std::uint64_t epsilon() const noexcept { return static_cast<std::uint64_t>(epsilon_); }

  /// A line within ±ε of every point added so far: the mean of the two extreme
  /// feasible lines. Requires size() ≥ 1.
  LinearModel model() const;

  /// Exact (as rationals) maximum and minimum slope over all feasible lines,
  /// as doubles. Requires size() ≥ 2.
  double min_slope() const;
  double max_slope() const;

 private:
  struct Point {
    Key x;
    std::int64_t y;
  };
  struct Slope {
    __int128 dx;
    __int128 dy;
  };

  static Slope diff(const Point& a, const Point& b) noexcept;
  static bool less(const Slope& a, const Slope& b) noexcept { return a.dy * b.dx < a.dx * b.dy; }
  static __int128 cross(const Point& o, const Point& a, const Point& b) noexcept;

  std::int64_t epsilon_;
  std::size_t count_ = 0;
  Key first_x_ = 0;
  Key last_x_ = 0;
  std::vector<Point> upper_;
  std::vector<Point> lower_;
  std::size_t upper_start_ = 0;
  std::size_t lower_start_ = 0;
  // rect_[0], rect_[2] define the min-slope line; rect_[1], rect_[3] the max-slope line.
  Point rect_[4]{};
};

/// True iff some line is within ±ε of every point. Points must be sorted by
/// strictly increasing key. Windows of one or two points are always feasible.
///
/// Builds the convex hull of the points and checks whether its minimal
/// vertical width, taken over the hull's edge directions, is at most 2ε.
bool segment_feasible(std::span<const CdfPoint> points, std::uint64_t epsilon);

/// Minimal ε-approximate segmentation, by greedy longest feasible prefix.
PlaSegmentation optimal_pla(const Dataset& dataset, std::uint64_t epsilon);

/// Number of segments optimal_pla() would return, without building models.
std::size_t segment_count(std::span<const Key> keys, std::uint64_t epsilon);

/// (segments at ε = 4096, segments at ε = 32).
HardnessProfile hardness_profile(const Dataset& dataset);
HardnessProfile hardness_profile(std::span<const Key> keys);

/// Mean squared rank residual of the least-squares line over all CDF points.
double mse_hardness(const Dataset& dataset);

/// Least-squares line mapping keys[i] to i, anchored at keys.front().
/// A single key yields slope 0 and intercept 0.
LinearModel fit_least_squares(std::span<const Key> keys);

}  // namespace lidx::pla
