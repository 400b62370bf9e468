#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lidx/core/oracle.hpp"
#include "lidx/core/rng.hpp"
#include "lidx/core/types.hpp"

namespace lidx::bench {

enum class WorkloadKind {
  kReadOnly,
  kReadIntensive,
  kBalanced,
  kWriteHeavy,
  kWriteOnly,
  kDeleteMix,
  kRangeScan,
  kDataShift,
  kZipfianMix,
};

std::string_view to_string(WorkloadKind kind);
std::optional<WorkloadKind> parse_workload(std::string_view name);
std::vector<WorkloadKind> all_workloads();

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kReadIntensive;
  /// Share of lookups; the rest are inserts, or removes for kDeleteMix.
  /// Ignored for kRangeScan.
  double read_fraction = 0.8;
  std::size_t scan_size = 100;
  double zipf_theta = 0.99;
  /// Share of the dataset bulk loaded; the remaining keys feed inserts.
  double bulk_fraction = 0.5;
  std::size_t op_count = 1'000'000;
  std::size_t thread_count = 1;
  double latency_sample_rate = 0.01;
  std::size_t repetitions = 3;
  std::uint64_t seed = 1;

  /// Defaults for `kind`, with read_fraction set to its usual mix.
  static WorkloadSpec for_kind(WorkloadKind kind);
  void validate() const;
};

struct Workload {
  std::vector<KeyValue> bulk;              // sorted, for bulk_load()
  std::vector<std::vector<Op>> per_thread;

  std::size_t total_ops() const;
};

/// Shuffles the dataset with spec.seed, bulk loads the first
/// bulk_fraction of it, and deals ops round-robin to threads. Each insert
/// key and each removed key appears once, so threads touch disjoint keys
/// for every mutation. Throws std::invalid_argument when the dataset is too
/// small for the requested mutations.
Workload build_workload(const WorkloadSpec& spec, const Dataset& dataset);

/// Same, with inserts drawn in order from `insert_keys` instead of the
/// unloaded part of the dataset.
Workload build_workload(const WorkloadSpec& spec, std::vector<Key> bulk_keys,
                        std::vector<Key> insert_keys);

/// Payload stored for a key by every workload, so results are checkable.
inline Payload payload_for(Key key) { return key ^ 0x5bd1e9955bd1e995ULL; }

/// Zipfian ranks over [0, n) with skew theta, as in the YCSB generator:
/// rank 0 is the most popular.
class ZipfGenerator {
 public:
  ZipfGenerator(std::size_t n, double theta);
  std::size_t next(Rng& rng) const;

 private:
  std::size_t n_;
  double theta_;
  double alpha_;
  double zetan_;
  double eta_;
};

}  // namespace lidx::bench
