#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "lidx/bench/workload.hpp"

namespace lidx::bench {

/// Measured results for one (dataset hardness, workload) pair.
struct HeatmapCell {
  std::size_t global_h = 0;
  std::size_t local_h = 0;
  WorkloadKind workload = WorkloadKind::kReadOnly;
  std::map<std::string, double> throughput_ops_s;  // by index name
};

struct CellSummary {
  std::string best_learned;
  std::string best_traditional;
  /// +learned/traditional when the best learned index is faster,
  /// −traditional/learned when it is slower, and 1.0 on a tie.
  double winner_ratio = 1.0;
};

double winner_ratio(double best_learned_ops_s, double best_traditional_ops_s);

/// Throws std::invalid_argument if the cell lacks a learned or a traditional
/// result, or holds an index the CSV has no column for.
CellSummary summarize(const HeatmapCell& cell);

inline constexpr std::string_view kHeatmapHeader =
    "global_h,local_h,workload,gapped_ops_s,chain_ops_s,btree_ops_s,"
    "best_learned,best_traditional,winner_ratio";

/// Header line, then one row per cell in the given order. Missing per-index
/// throughputs are written as empty fields.
void emit_heatmap(std::span<const HeatmapCell> cells, std::ostream& out);

}  // namespace lidx::bench
