#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lidx/bench/workload.hpp"
#include "lidx/core/counters.hpp"
#include "lidx/core/ordered_index.hpp"

namespace lidx::bench {

using IndexFactory = std::function<std::unique_ptr<OrderedIndex>()>;

struct LatencySummary {
  std::size_t samples = 0;
  std::uint64_t p50_ns = 0;
  std::uint64_t p99_ns = 0;
  std::uint64_t p999_ns = 0;
  double mean_ns = 0.0;
  double variance_ns2 = 0.0;
};

/// Nearest-rank percentile: the smallest sample with at least q·n samples at
/// or below it. `sorted` must be ascending and non-empty; q in (0, 1].
std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double q);

/// Sorts `samples_ns` and summarizes it. Empty input gives all zeros.
LatencySummary summarize_latencies(std::vector<std::uint64_t> samples_ns);

struct OpMix {
  std::size_t lookups = 0;
  std::size_t inserts = 0;
  std::size_t removes = 0;
  std::size_t scans = 0;

  friend bool operator==(const OpMix&, const OpMix&) = default;
};

OpMix count_ops(const Workload& workload);

struct RunReport {
  std::string index;
  std::string workload;
  std::size_t threads = 0;
  std::size_t ops_per_repetition = 0;
  std::size_t bulk_keys = 0;
  std::uint64_t seed = 0;
  OpMix mix;

  double throughput_ops_s = 0.0;                 // mean over repetitions
  std::vector<double> repetition_throughput_ops_s;
  std::vector<double> repetition_seconds;
  LatencySummary latency;                        // pooled over repetitions

  Counters counters;                             // last repetition, after bulk load
  std::size_t memory_bytes_end = 0;              // last repetition
  std::uint64_t keys_scanned = 0;                // last repetition

  std::size_t keys_end = 0;
  std::uint64_t key_set_digest = 0;              // over (key, payload) in key order
  bool verified = false;
  std::string failure;                           // first problem found, if any
};

/// Order-sensitive digest of a sorted key/payload sequence.
std::uint64_t digest(std::span<const KeyValue> rows);

/// Contents the index must hold after `workload` runs: mutations are
/// disjoint across threads, so replaying the streams one after another
/// through the reference oracle gives the same final state as any
/// interleaving.
std::vector<KeyValue> expected_contents(const Workload& workload);

/// Runs `workload` spec.repetitions times, each time against a fresh index
/// from `factory`. Bulk loading is not timed. Every latency_sample_rate⁻¹-th
/// op of each thread is timed individually. After every repetition the index
/// contents are compared with expected_contents(); lookups of keys that are
/// never removed must return their payload.
RunReport run(const IndexFactory& factory, const WorkloadSpec& spec, const Workload& workload);

/// build_workload() followed by run().
RunReport run(const IndexFactory& factory, const WorkloadSpec& spec, const Dataset& dataset);

}  // namespace lidx::bench
