#include "lidx/pla/pla.hpp"

#include <cassert>
#include <stdexcept>

namespace lidx::pla {

StreamingFitter::Slope StreamingFitter::diff(const Point& a, const Point& b) noexcept {
  return {static_cast<__int128>(a.x) - static_cast<__int128>(b.x),
          static_cast<__int128>(a.y) - static_cast<__int128>(b.y)};
}

__int128 StreamingFitter::cross(const Point& o, const Point& a, const Point& b) noexcept {
  const Slope oa = diff(a, o);
  const Slope ob = diff(b, o);
  return oa.dx * ob.dy - oa.dy * ob.dx;
}

StreamingFitter::Placement StreamingFitter::place(Key x, std::uint64_t y) const noexcept {
  if (count_ == 0) {
    return Placement::kFits;
  }
  if (x <= last_x_) {
    return Placement::kKeyTooSmall;
  }
  if (count_ == 1) {
    return Placement::kFits;
  }
  const auto sy = static_cast<std::int64_t>(y);
  const Point p1{x, sy + epsilon_};
  const Point p2{x, sy - epsilon_};
  // p1 under the min-slope line: the rank is too low for this key.
  if (less(diff(p1, rect_[2]), diff(rect_[2], rect_[0]))) {
    return Placement::kKeyTooLarge;
  }
  // p2 over the max-slope line: the rank is too high for this key.
  if (less(diff(rect_[3], rect_[1]), diff(p2, rect_[3]))) {
    return Placement::kKeyTooSmall;
  }
  return Placement::kFits;
}

bool StreamingFitter::add(Key x, std::uint64_t y) {
  if (count_ > 0 && x <= last_x_) {
    throw std::invalid_argument("StreamingFitter: keys must be strictly increasing");
  }
  const auto sy = static_cast<std::int64_t>(y);
  const Point p1{x, sy + epsilon_};
  const Point p2{x, sy - epsilon_};

  if (count_ == 0) {
    first_x_ = x;
    last_x_ = x;
    rect_[0] = p1;
    rect_[1] = p2;
    upper_.clear();
    lower_.clear();
    upper_.push_back(p1);
    lower_.push_back(p2);
    upper_start_ = 0;
    lower_start_ = 0;
    count_ = 1;
    return true;
  }
  if (count_ == 1) {
    last_x_ = x;
    rect_[2] = p2;
    rect_[3] = p1;
    upper_.push_back(p1);
    lower_.push_back(p2);
    count_ = 2;
    return true;
  }

  const Slope slope1 = diff(rect_[2], rect_[0]);
  const Slope slope2 = diff(rect_[3], rect_[1]);
  if (less(diff(p1, rect_[2]), slope1) || less(slope2, diff(p2, rect_[3]))) {
    return false;
  }
  last_x_ = x;

  if (less(diff(p1, rect_[1]), slope2)) {
    // The max-slope line now pivots on p1.
    Slope best = diff(lower_[lower_start_], p1);
    std::size_t best_i = lower_start_;
    for (std::size_t i = lower_start_ + 1; i < lower_.size(); ++i) {
      const Slope s = diff(lower_[i], p1);
      if (less(best, s)) {
        break;
      }
      best = s;
      best_i = i;
    }
    rect_[1] = lower_[best_i];
    rect_[3] = p1;
    lower_start_ = best_i;

    std::size_t end = upper_.size();
    while (end >= upper_start_ + 2 && cross(upper_[end - 2], upper_[end - 1], p1) <= 0) {
      --end;
    }
    upper_.resize(end);
    upper_.push_back(p1);
  }

  if (less(slope1, diff(p2, rect_[0]))) {
    // The min-slope line now pivots on p2.
    Slope best = diff(upper_[upper_start_], p2);
    std::size_t best_i = upper_start_;
    for (std::size_t i = upper_start_ + 1; i < upper_.size(); ++i) {
      const Slope s = diff(upper_[i], p2);
      if (less(s, best)) {
        break;
      }
      best = s;
      best_i = i;
    }
    rect_[0] = upper_[best_i];
    rect_[2] = p2;
    upper_start_ = best_i;

    std::size_t end = lower_.size();
    while (end >= lower_start_ + 2 && cross(lower_[end - 2], lower_[end - 1], p2) >= 0) {
      --end;
    }
    lower_.resize(end);
    lower_.push_back(p2);
  }

  ++count_;
  return true;
}

double StreamingFitter::min_slope() const {
  assert(count_ >= 2);
  const Slope s = diff(rect_[2], rect_[0]);
  return static_cast<double>(static_cast<long double>(s.dy) / static_cast<long double>(s.dx));
}

double StreamingFitter::max_slope() const {
  assert(count_ >= 2);
  const Slope s = diff(rect_[3], rect_[1]);
  return static_cast<double>(static_cast<long double>(s.dy) / static_cast<long double>(s.dx));
}

LinearModel StreamingFitter::model() const {
  assert(count_ >= 1);
  if (count_ == 1) {
    return {0.0, static_cast<double>(rect_[0].y - epsilon_), first_x_};
  }
  auto line_at_origin = [&](const Point& a, const Point& b, long double& slope) {
    const Slope s = diff(b, a);
    slope = static_cast<long double>(s.dy) / static_cast<long double>(s.dx);
    const long double back = static_cast<long double>(first_x_) - static_cast<long double>(a.x);
    return static_cast<long double>(a.y) + slope * back;
  };
  long double s1 = 0;
  long double s2 = 0;
  const long double v1 = line_at_origin(rect_[0], rect_[2], s1);
  const long double v2 = line_at_origin(rect_[1], rect_[3], s2);
  return {static_cast<double>((s1 + s2) / 2), static_cast<double>((v1 + v2) / 2), first_x_};
}

namespace {

struct HullPoint {
  __int128 x;
  __int128 y;
};

__int128 cross(const HullPoint& o, const HullPoint& a, const HullPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Index of the vertex maximizing y·dx − dy·x on an upper hull (edge slopes
// strictly decreasing).
std::size_t upper_argmax(const std::vector<HullPoint>& hull, __int128 dx, __int128 dy) {
  std::size_t lo = 0;
  std::size_t hi = hull.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const __int128 ex = hull[mid + 1].x - hull[mid].x;
    const __int128 ey = hull[mid + 1].y - hull[mid].y;
    if (ey * dx > dy * ex) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// Index of the vertex minimizing y·dx − dy·x on a lower hull (edge slopes
// strictly increasing).
std::size_t lower_argmin(const std::vector<HullPoint>& hull, __int128 dx, __int128 dy) {
  std::size_t lo = 0;
  std::size_t hi = hull.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const __int128 ex = hull[mid + 1].x - hull[mid].x;
    const __int128 ey = hull[mid + 1].y - hull[mid].y;
    if (ey * dx < dy * ex) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace

bool segment_feasible(std::span<const CdfPoint> points, std::uint64_t epsilon) {
  if (points.size() <= 2) {
    return true;
  }
  const Key x0 = points.front().key;
  const std::uint64_t y0 = points.front().rank;
  std::vector<HullPoint> upper;
  std::vector<HullPoint> lower;
  for (const CdfPoint& p : points) {
    const HullPoint h{static_cast<__int128>(p.key - x0),
                      static_cast<__int128>(p.rank) - static_cast<__int128>(y0)};
    while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), h) <= 0) {
      lower.pop_back();
    }
    lower.push_back(h);
    while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), h) >= 0) {
      upper.pop_back();
    }
    upper.push_back(h);
  }

  const __int128 two_eps = 2 * static_cast<__int128>(epsilon);
  auto fits = [&](__int128 dx, __int128 dy) {
    const HullPoint& top = upper[upper_argmax(upper, dx, dy)];
    const HullPoint& bottom = lower[lower_argmin(lower, dx, dy)];
    const __int128 width = (top.y * dx - dy * top.x) - (bottom.y * dx - dy * bottom.x);
    return width <= two_eps * dx;
  };
  for (const auto* hull : {&upper, &lower}) {
    for (std::size_t i = 0; i + 1 < hull->size(); ++i) {
      const HullPoint& a = (*hull)[i];
      const HullPoint& b = (*hull)[i + 1];
      if (fits(b.x - a.x, b.y - a.y)) {
        return true;
      }
    }
  }
  return false;
}

PlaSegmentation optimal_pla(const Dataset& dataset, std::uint64_t epsilon) {
  PlaSegmentation out;
  out.epsilon = epsilon;
  const auto keys = dataset.keys();
  if (keys.empty()) {
    return out;
  }
  StreamingFitter fitter(epsilon);
  std::uint64_t start = 0;
  for (std::uint64_t r = 0; r < keys.size(); ++r) {
    if (!fitter.add(keys[r], r)) {
      out.segments.push_back({start, r - start, fitter.model()});
      start = r;
      fitter.reset();
      fitter.add(keys[r], r);
    }
  }
  out.segments.push_back({start, keys.size() - start, fitter.model()});
  return out;
}

std::size_t segment_count(std::span<const Key> keys, std::uint64_t epsilon) {
  if (keys.empty()) {
    return 0;
  }
  StreamingFitter fitter(epsilon);
  std::size_t segments = 1;
  for (std::uint64_t r = 0; r < keys.size(); ++r) {
    if (!fitter.add(keys[r], r)) {
      ++segments;
      fitter.reset();
      fitter.add(keys[r], r);
    }
  }
  return segments;
}

HardnessProfile hardness_profile(std::span<const Key> keys) {
  return {segment_count(keys, kGlobalEpsilon), segment_count(keys, kLocalEpsilon)};
}

HardnessProfile hardness_profile(const Dataset& dataset) { return hardness_profile(dataset.keys()); }

namespace {

struct PreciseLine {
  long double slope = 0;
  long double intercept = 0;
};

PreciseLine least_squares(std::span<const Key> keys) {
  const Key origin = keys.front();
  const auto n = static_cast<long double>(keys.size());
  long double mean_x = 0;
  for (Key k : keys) {
    mean_x += static_cast<long double>(k - origin);
  }
  mean_x /= n;
  const long double mean_y = (n - 1) / 2;
  long double sxx = 0;
  long double sxy = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const long double dx = static_cast<long double>(keys[i] - origin) - mean_x;
    sxx += dx * dx;
    sxy += dx * (static_cast<long double>(i) - mean_y);
  }
  const long double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

}  // namespace

LinearModel fit_least_squares(std::span<const Key> keys) {
  if (keys.size() < 2) {
    return {0.0, 0.0, keys.empty() ? Key{0} : keys.front()};
  }
  const PreciseLine line = least_squares(keys);
  return {static_cast<double>(line.slope), static_cast<double>(line.intercept), keys.front()};
}

double mse_hardness(const Dataset& dataset) {
  const auto keys = dataset.keys();
  if (keys.size() < 2) {
    return 0.0;
  }
  const PreciseLine line = least_squares(keys);
  long double sum = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const long double x = static_cast<long double>(keys[i] - keys.front());
    const long double r = line.slope * x + line.intercept - static_cast<long double>(i);
    sum += r * r;
  }
  return static_cast<double>(sum / static_cast<long double>(keys.size()));
}

}  // namespace lidx::pla
