#include "lidx/core/counters.hpp"

#include "lidx/sync/thread_slot.hpp"

namespace lidx {

Counters Counters::operator-(const Counters& rhs) const {
  Counters d;
  d.lookups = lookups - rhs.lookups;
  d.inserts = inserts - rhs.inserts;
  d.updates = updates - rhs.updates;
  d.removes = removes - rhs.removes;
  d.scans = scans - rhs.scans;
  d.nodes_traversed = nodes_traversed - rhs.nodes_traversed;
  d.keys_shifted = keys_shifted - rhs.keys_shifted;
  d.nodes_created = nodes_created - rhs.nodes_created;
  d.smo_count = smo_count - rhs.smo_count;
  d.retrain_count = retrain_count - rhs.retrain_count;
  d.key_comparisons = key_comparisons - rhs.key_comparisons;
  return d;
}

StripedCounters::StripedCounters() : stripes_(std::make_unique<Stripe[]>(kStripes)) {}

void StripedCounters::add(Counter c, std::uint64_t delta) noexcept {
  auto& cell = stripes_[sync::thread_slot() % kStripes].values[static_cast<std::size_t>(c)];
  cell.fetch_add(delta, std::memory_order_relaxed);
}

Counters StripedCounters::snapshot() const noexcept {
  std::array<std::uint64_t, kFields> sum{};
  for (std::size_t s = 0; s < kStripes; ++s) {
    for (std::size_t f = 0; f < kFields; ++f) {
      sum[f] += stripes_[s].values[f].load(std::memory_order_relaxed);
    }
  }
  auto at = [&](Counter c) { return sum[static_cast<std::size_t>(c)]; };
  Counters out;
  out.lookups = at(Counter::kLookups);
  out.inserts = at(Counter::kInserts);
  out.updates = at(Counter::kUpdates);
  out.removes = at(Counter::kRemoves);
  out.scans = at(Counter::kScans);
  out.nodes_traversed = at(Counter::kNodesTraversed);
  out.keys_shifted = at(Counter::kKeysShifted);
  out.nodes_created = at(Counter::kNodesCreated);
  out.smo_count = at(Counter::kSmoCount);
  out.retrain_count = at(Counter::kRetrainCount);
  out.key_comparisons = at(Counter::kKeyComparisons);
  return out;
}

void StripedCounters::reset() noexcept {
  for (std::size_t s = 0; s < kStripes; ++s) {
    for (auto& v : stripes_[s].values) {
      v.store(0, std::memory_order_relaxed);
    }
  }
}

}  // namespace lidx
