#include "lidx/datagen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lidx::datagen {
namespace {

constexpr Key kMaxKey = std::numeric_limits<Key>::max();
constexpr long double kKeySpace = 18446744073709551616.0L;  // 2^64

// rank = slope · (key − origin) + intercept, kept in extended precision.
struct Line {
  long double slope;
  long double intercept;
  Key origin;

  long double at(Key key) const {
    return slope * (static_cast<long double>(key) - static_cast<long double>(origin)) + intercept;
  }

  // Key whose prediction is `rank`.
  long double key_for(long double rank) const {
    return static_cast<long double>(origin) + (rank - intercept) / slope;
  }
};

struct KeyRange {
  Key lo;
  Key hi;
};

// Integer keys k ≥ floor_key with |line(k) − rank| ≤ ε, or nullopt if none.
std::optional<KeyRange> window(const Line& line, std::uint64_t rank, std::uint64_t epsilon,
                               Key floor_key) {
  const auto y = static_cast<long double>(rank);
  const auto e = static_cast<long double>(epsilon);
  long double lo = std::ceil(line.key_for(y - e));
  long double hi = std::floor(line.key_for(y + e));
  if (hi < 0 || lo > hi) {
    return std::nullopt;
  }
  if (lo >= kKeySpace) {
    throw GenerationError("generator ran out of 64-bit key space");
  }
  lo = std::max(lo, 0.0L);
  hi = std::min(hi, kKeySpace - 1);
  KeyRange r{static_cast<Key>(lo), hi >= kKeySpace - 1 ? kMaxKey : static_cast<Key>(hi)};
  r.lo = std::max(r.lo, floor_key);
  if (r.lo > r.hi) {
    return std::nullopt;
  }
  return r;
}

std::optional<KeyRange> intersect(const std::optional<KeyRange>& a, const std::optional<KeyRange>& b) {
  if (!a || !b) {
    return std::nullopt;
  }
  KeyRange r{std::max(a->lo, b->lo), std::min(a->hi, b->hi)};
  if (r.lo > r.hi) {
    return std::nullopt;
  }
  return r;
}

bool within(const Line& line, Key key, std::uint64_t rank, std::uint64_t epsilon) {
  return std::fabs(line.at(key) - static_cast<long double>(rank)) <= static_cast<long double>(epsilon);
}

class Builder {
 public:
  Builder(const GenSpec& spec, Rng& rng, std::vector<Key>& keys)
      : spec_(spec), rng_(rng), keys_(keys), global_fit_(spec.epsilon_global), local_fit_(spec.epsilon_local) {}

  // Key that starts the next global segment: past the upper breakpoint of
  // both the global and the local hull, so it ends a segment at both ε.
  Key forced_global_start() const {
    if (keys_.empty()) {
      return rng_.uniform(0, spec_.first_key_max);
    }
    const Key prev = keys_.back();
    const std::uint64_t rank = keys_.size();
    return std::max(upper_break(global_fit_, prev, rank), upper_break(local_fit_, prev, rank));
  }

  // One attempt at a global segment made of local segments of the given
  // sizes. On failure the caller truncates `keys` and retries.
  bool build_global(Key start, std::span<const std::size_t> local_sizes) {
    const auto rank0 = static_cast<std::uint64_t>(keys_.size());
    const double log_lo = std::log2(spec_.slope_min);
    const double log_hi = std::log2(spec_.slope_max);
    const Line global{std::exp2(static_cast<long double>(rng_.uniform_real(log_lo, log_hi))),
                      static_cast<long double>(rank0) + intercept(spec_.epsilon_global), start};
    global_fit_.reset();

    std::uint64_t rank = rank0;
    for (std::size_t j = 0; j < local_sizes.size(); ++j) {
      Key seg_start = start;
      if (j > 0) {
        try {
          seg_start = next_segment_start(local_fit_, keys_.back(), rank);
        } catch (const GenerationError&) {
          return false;
        }
      }
      if (!within(global, seg_start, rank, spec_.epsilon_global)) {
        return false;
      }
      const auto local = choose_local(global, seg_start, rank, local_sizes[j]);
      if (!local) {
        return false;
      }
      local_fit_.reset();
      if (!emit(seg_start, rank)) {
        return false;
      }
      ++rank;
      for (std::size_t i = 1; i < local_sizes[j]; ++i, ++rank) {
        const Key floor_key = keys_.back() + 1;
        const auto range = intersect(window(*local, rank, spec_.epsilon_local, floor_key),
                                     window(global, rank, spec_.epsilon_global, floor_key));
        if (!range || !emit(rng_.uniform(range->lo, range->hi), rank)) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  long double intercept(std::uint64_t epsilon) {
    return static_cast<long double>(rng_.uniform_real(spec_.intercept_min, spec_.intercept_max)) *
           static_cast<long double>(epsilon);
  }

  // Local line through (start, rank + b) that ends its segment at a random
  // offset in [−ε_g/2, ε_g/2] from the global line, so consecutive local
  // segments stay inside the global band.
  std::optional<Line> choose_local(const Line& global, Key start, std::uint64_t rank, std::size_t count) {
    const auto eg = static_cast<long double>(spec_.epsilon_global);
    for (std::size_t t = 0; t < spec_.max_attempts; ++t) {
      const long double b = static_cast<long double>(rank) + intercept(spec_.epsilon_local);
      if (count == 1) {
        return Line{global.slope, b, start};
      }
      const long double end_rank = static_cast<long double>(rank + count - 1);
      const long double offset = static_cast<long double>(rng_.uniform_real(-0.5, 0.5)) * eg;
      const long double end_key = global.key_for(end_rank - offset);
      const long double dx = end_key - static_cast<long double>(start);
      if (!(dx > 0)) {
        continue;
      }
      const long double slope = (end_rank - b) / dx;
      if (slope > 0 && slope <= 1) {
        return Line{slope, b, start};
      }
    }
    return std::nullopt;
  }

  bool emit(Key key, std::uint64_t rank) {
    if (!keys_.empty() && key <= keys_.back()) {
      return false;
    }
    if (!global_fit_.add(key, rank) || !local_fit_.add(key, rank)) {
      return false;
    }
    keys_.push_back(key);
    return true;
  }

  const GenSpec& spec_;
  Rng& rng_;
  std::vector<Key>& keys_;
  pla::StreamingFitter global_fit_;
  pla::StreamingFitter local_fit_;
};

std::string segment_error(const char* level, std::size_t keys, std::uint64_t epsilon) {
  return std::string(level) + " segment of " + std::to_string(keys) +
         " keys cannot be closed at epsilon " + std::to_string(epsilon) + ": at least " +
         std::to_string(2 * epsilon + 2) + " keys are needed";
}

}  // namespace

std::vector<std::size_t> GenSpec::local_counts() const {
  std::vector<std::size_t> out(target_local, n_keys / target_local);
  for (std::size_t i = 0; i < n_keys % target_local; ++i) {
    ++out[i];
  }
  return out;
}

std::vector<std::size_t> GenSpec::locals_per_global() const {
  std::vector<std::size_t> out(target_global, target_local / target_global);
  for (std::size_t i = 0; i < target_local % target_global; ++i) {
    ++out[i];
  }
  return out;
}

void GenSpec::validate() const {
  if (target_global == 0) {
    throw std::invalid_argument("target_global must be at least 1");
  }
  if (target_local < target_global) {
    throw std::invalid_argument("target_local must be at least target_global");
  }
  if (n_keys < target_local) {
    throw std::invalid_argument("n_keys must be at least target_local");
  }
  if (epsilon_local > epsilon_global) {
    throw std::invalid_argument("epsilon_local must not exceed epsilon_global");
  }
  if (!(slope_min > 0) || !(slope_min <= slope_max) || !(slope_max <= 1)) {
    throw std::invalid_argument("slope range must satisfy 0 < slope_min <= slope_max <= 1");
  }
  if (!(intercept_min >= -1) || !(intercept_min <= intercept_max) || !(intercept_max <= 1)) {
    throw std::invalid_argument("intercept range must lie within [-1, 1]");
  }
  if (max_attempts == 0) {
    throw std::invalid_argument("max_attempts must be positive");
  }
  const auto locals = local_counts();
  for (std::size_t i = 0; i + 1 < locals.size(); ++i) {
    if (locals[i] < 2 * epsilon_local + 2) {
      throw std::invalid_argument(segment_error("local", locals[i], epsilon_local));
    }
  }
  const auto groups = locals_per_global();
  std::size_t next = 0;
  for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
    std::size_t size = 0;
    for (std::size_t j = 0; j < groups[g]; ++j) {
      size += locals[next++];
    }
    if (size < 2 * epsilon_global + 2) {
      throw std::invalid_argument(segment_error("global", size, epsilon_global));
    }
  }
}

Key upper_break(const pla::StreamingFitter& hull, Key prev, std::uint64_t rank) {
  using P = pla::StreamingFitter::Placement;
  auto too_large = [&](Key k) { return hull.place(k, rank) == P::kKeyTooLarge; };
  if (prev == kMaxKey) {
    throw GenerationError("generator ran out of 64-bit key space");
  }
  Key lo = prev;  // largest probe known not to be too large
  Key hi = prev + 1;
  Key step = 1;
  while (!too_large(hi)) {
    if (hi == kMaxKey) {
      throw GenerationError("no key below 2^64 ends the segment");
    }
    lo = hi;
    step = step > (kMaxKey >> 1) ? kMaxKey : step * 2;
    hi = step > kMaxKey - prev ? kMaxKey : prev + step;
  }
  while (hi - lo > 1) {
    const Key mid = lo + (hi - lo) / 2;
    if (too_large(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Key next_segment_start(const pla::StreamingFitter& hull, Key prev, std::uint64_t rank) {
  if (prev == kMaxKey) {
    throw GenerationError("generator ran out of 64-bit key space");
  }
  if (hull.place(prev + 1, rank) != pla::StreamingFitter::Placement::kFits) {
    return prev + 1;
  }
  return upper_break(hull, prev, rank);
}

Key next_segment_start(const SegmentState& state, std::uint64_t epsilon) {
  if (!state.prev || state.hull.empty()) {
    throw std::invalid_argument("next_segment_start needs a non-empty segment");
  }
  if (state.hull.epsilon() != epsilon) {
    throw std::invalid_argument("segment hull was built with a different epsilon");
  }
  return next_segment_start(state.hull, *state.prev, state.next_rank);
}

std::vector<Key> gen_segment(SegmentState& state, std::uint64_t epsilon, std::size_t count, Rng& rng) {
  if (!(state.model.slope > 0)) {
    throw std::invalid_argument("segment model needs a positive slope");
  }
  if (state.hull.epsilon() != epsilon) {
    if (!state.hull.empty()) {
      throw std::invalid_argument("segment hull was built with a different epsilon");
    }
    state.hull = pla::StreamingFitter(epsilon);
  }
  const Line line{state.model.slope, state.model.intercept, state.model.origin};
  std::vector<Key> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Key floor_key = 0;
    if (state.prev) {
      if (*state.prev == kMaxKey) {
        throw GenerationError("generator ran out of 64-bit key space");
      }
      floor_key = *state.prev + 1;
    }
    const auto range = window(line, state.next_rank, epsilon, floor_key);
    if (!range) {
      throw GenerationError("empty sampling interval at rank " + std::to_string(state.next_rank));
    }
    const Key key = rng.uniform(range->lo, range->hi);
    if (!state.hull.add(key, state.next_rank)) {
      throw GenerationError("sampled key left the segment hull at rank " + std::to_string(state.next_rank));
    }
    state.prev = key;
    ++state.next_rank;
    out.push_back(key);
  }
  return out;
}

Dataset generate(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Key> keys;
  keys.reserve(spec.n_keys);
  Builder builder(spec, rng, keys);

  const auto locals = spec.local_counts();
  const auto groups = spec.locals_per_global();
  std::size_t first_local = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::span<const std::size_t> sizes(locals.data() + first_local, groups[g]);
    first_local += groups[g];
    const std::size_t rank0 = keys.size();
    const Key start = builder.forced_global_start();
    bool built = false;
    for (std::size_t attempt = 0; attempt < spec.max_attempts && !built; ++attempt) {
      keys.resize(rank0);
      built = builder.build_global(start, sizes);
    }
    if (!built) {
      throw GenerationError("could not place global segment " + std::to_string(g) + " after " +
                            std::to_string(spec.max_attempts) + " attempts");
    }
  }
  return Dataset::from_sorted_unique(std::move(keys));
}

}  // namespace lidx::datagen
