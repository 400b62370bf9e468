#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lidx/core/rng.hpp"
#include "lidx/core/types.hpp"
#include "lidx/pla/pla.hpp"

namespace lidx::datagen {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters of a synthetic dataset with chosen PLA hardness.
///
/// Keys are split into target_local local segments of equal size (the first
/// n_keys % target_local get one extra key). Local segments are grouped into
/// target_global global segments, the first target_local % target_global
/// global segments taking one extra local segment.
struct GenSpec {
  std::size_t n_keys = 200'000;
  std::size_t target_global = 1;
  std::size_t target_local = 1;
  std::uint64_t epsilon_global = pla::kGlobalEpsilon;
  std::uint64_t epsilon_local = pla::kLocalEpsilon;
  std::uint64_t seed = 0;

  /// Global segment slopes (ranks per key unit) are log-uniform in this range.
  /// Slopes above 1 cannot hold unique integer keys over a long segment.
  double slope_min = 0x1p-8;
  double slope_max = 0x1p-1;

  /// Offset of a segment's line at its first key, in units of the segment's ε.
  double intercept_min = -1.0;
  double intercept_max = 1.0;

  /// The first key is drawn uniformly from [0, first_key_max].
  Key first_key_max = Key{1} << 20;

  /// Resampling budget per segment model before generation gives up.
  std::size_t max_attempts = 64;

  /// Throws std::invalid_argument when no dataset can satisfy these targets. A
  /// segment boundary can only be forced after at least 2ε + 2 keys, so every
  /// segment that is followed by another needs that many keys.
  void validate() const;

  std::vector<std::size_t> local_counts() const;
  std::vector<std::size_t> locals_per_global() const;
};

/// Generation state of one segment: its line, the last emitted key and the
/// hull of the emitted (key, rank) points.
struct SegmentState {
  explicit SegmentState(std::uint64_t epsilon) : hull(epsilon) {}

  pla::LinearModel model;
  std::optional<Key> prev;
  std::uint64_t next_rank = 0;
  pla::StreamingFitter hull;
};

/// Emits `count` keys for consecutive ranks. Each key is drawn uniformly from
/// the integers k ≥ prev + 1 with |model(k) − rank| ≤ ε. Throws
/// GenerationError if that set is empty for some rank.
std::vector<Key> gen_segment(SegmentState& state, std::uint64_t epsilon, std::size_t count, Rng& rng);

/// Smallest key above prev that cannot join the segment at rank next_rank.
/// Throws GenerationError if no such key exists below 2^64.
Key next_segment_start(const SegmentState& state, std::uint64_t epsilon);

/// Same search on a bare fitter.
Key next_segment_start(const pla::StreamingFitter& hull, Key prev, std::uint64_t rank);

/// Smallest key k above prev such that every key ≥ k is too large to join
/// the segment at `rank`.
Key upper_break(const pla::StreamingFitter& hull, Key prev, std::uint64_t rank);

/// Builds a dataset whose measured hardness is (target_global, target_local).
/// Deterministic in spec.seed.
Dataset generate(const GenSpec& spec);

}  // namespace lidx::datagen
