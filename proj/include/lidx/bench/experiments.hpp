#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidx/bench/heatmap.hpp"
#include "lidx/bench/runner.hpp"

namespace lidx::bench {

/// Maps `from` onto [lo, hi] with k ↦ lo + (k − min)·(hi − lo) / (max − min)
/// in exact integer arithmetic. Keys that land on the same value collapse.
/// Throws std::invalid_argument if `from` has fewer than two keys or lo > hi.
Dataset scale_into_domain(const Dataset& from, Key lo, Key hi);

struct ShiftResult {
  RunReport baseline;
  RunReport shifted;
  double relative_change = 0.0;  // shifted / baseline − 1, on mean throughput
  std::size_t shifted_pool = 0;  // scaled insert keys left after dropping collisions
};

/// Bulk loads the seeded bulk_fraction of `bulk_ds` and runs `spec` twice:
/// once inserting the rest of `bulk_ds` (baseline), once inserting
/// `insert_ds` scaled into bulk_ds's key domain. Scaled keys that collide
/// with a loaded key are dropped. Lookups always target loaded keys.
ShiftResult run_data_shift(const IndexFactory& factory, const Dataset& bulk_ds, const Dataset& insert_ds,
                           WorkloadSpec spec);

struct RangePoint {
  std::size_t scan_size = 0;
  std::size_t scans = 0;
  std::uint64_t keys = 0;
  double seconds = 0.0;
  double keys_per_s = 0.0;
  std::size_t unsorted = 0;         // scans not starting at the start key or not strictly increasing
  std::size_t oracle_checked = 0;
  std::size_t oracle_mismatches = 0;
};

inline constexpr std::size_t kDefaultScanSizes[] = {10, 100, 1000, 10000};

/// Bulk loads `dataset` (payload_for() payloads) into `index`, then times
/// `scans_per_size` scans per size from uniformly chosen dataset keys. Every
/// `oracle_every`-th scan is compared with the dataset itself.
std::vector<RangePoint> run_range_sweep(OrderedIndex& index, const Dataset& dataset,
                                        std::span<const std::size_t> sizes = kDefaultScanSizes,
                                        std::size_t scans_per_size = 10'000, std::uint64_t seed = 1,
                                        std::size_t oracle_every = 100);

/// Heatmap experiment grid, read from TOML:
///
///   n_keys = 200000        # per generated dataset
///   ops = 100000
///   threads = 1
///   repetitions = 1
///   seed = 1
///   global = [2, 8]        # target global hardness values
///   local = [8, 64]        # target local hardness values
///   indexes = ["gapped", "chain", "btree"]
///   workloads = ["read_only", "balanced", "write_only"]
struct HeatmapPlan {
  std::size_t n_keys = 200'000;
  std::size_t ops = 100'000;
  std::size_t threads = 1;
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::vector<std::size_t> global_targets{2, 8};
  std::vector<std::size_t> local_targets{8, 64};
  std::vector<std::string> indexes{"gapped", "chain", "btree"};
  std::vector<WorkloadKind> workloads{WorkloadKind::kReadOnly, WorkloadKind::kBalanced,
                                      WorkloadKind::kWriteOnly};
};

/// Throws std::invalid_argument on unknown keys, bad values or TOML errors.
HeatmapPlan parse_plan(std::string_view toml_text);
HeatmapPlan load_plan(const std::filesystem::path& path);

/// Generates one dataset per (global, local) target, measures its hardness,
/// and runs every workload on every index. Cells carry measured hardness.
/// Progress lines go to `log` when it is non-null.
std::vector<HeatmapCell> run_plan(const HeatmapPlan& plan, std::ostream* log = nullptr);

}  // namespace lidx::bench
