#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>

namespace lidx {

/// Snapshot of per-index operation statistics.
struct Counters {
  std::uint64_t lookups = 0;
  std::uint64_t inserts = 0;          // successful new-key inserts
  std::uint64_t updates = 0;          // inserts that overwrote an existing key
  std::uint64_t removes = 0;          // successful removes
  std::uint64_t scans = 0;
  std::uint64_t nodes_traversed = 0;  // routing nodes visited by lookups and inserts
  std::uint64_t keys_shifted = 0;     // slots moved to open a gap
  std::uint64_t nodes_created = 0;    // collision-driven node allocations
  std::uint64_t smo_count = 0;        // structure modification operations
  std::uint64_t retrain_count = 0;    // models fitted after bulk load
  std::uint64_t key_comparisons = 0;  // full key compares at the final slot

  Counters operator-(const Counters& rhs) const;
  friend bool operator==(const Counters&, const Counters&) = default;
};

enum class Counter : std::size_t {
  kLookups,
  kInserts,
  kUpdates,
  kRemoves,
  kScans,
  kNodesTraversed,
  kKeysShifted,
  kNodesCreated,
  kSmoCount,
  kRetrainCount,
  kKeyComparisons,
  kCount_
};

/// Counters striped by thread slot so that hot-path increments from
/// different threads land on different cache lines. Increments are relaxed;
/// snapshot() taken while writers run is approximate.
class StripedCounters {
 public:
  StripedCounters();

  void add(Counter c, std::uint64_t delta = 1) noexcept;
  Counters snapshot() const noexcept;
  void reset() noexcept;

 private:
  static constexpr std::size_t kStripes = 16;
  static constexpr std::size_t kFields = static_cast<std::size_t>(Counter::kCount_);
  struct alignas(64) Stripe {
    std::array<std::atomic<std::uint64_t>, kFields> values{};
  };
  std::unique_ptr<Stripe[]> stripes_;
};

}  // namespace lidx
