#include "lidx/bench/heatmap.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include "lidx/bench/factory.hpp"

namespace lidx::bench {

namespace {

constexpr std::array<std::string_view, 3> kColumns{"gapped", "chain", "btree"};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double winner_ratio(double learned, double traditional) {
  if (!(learned > 0.0) || !(traditional > 0.0)) {
    throw std::invalid_argument("winner ratio needs positive throughputs");
  }
  if (learned > traditional) {
    return learned / traditional;
  }
  if (learned < traditional) {
    return -(traditional / learned);
  }
  return 1.0;
}

CellSummary summarize(const HeatmapCell& cell) {
  CellSummary s;
  double best_l = 0.0;
  double best_t = 0.0;
  for (const auto& [name, ops] : cell.throughput_ops_s) {
    bool known = false;
    for (auto c : kColumns) {
      known = known || c == name;
    }
    if (!known) {
      throw std::invalid_argument("heatmap has no column for index '" + name + "'");
    }
    double& best = is_learned(name) ? best_l : best_t;
    std::string& who = is_learned(name) ? s.best_learned : s.best_traditional;
    if (ops > best) {
      best = ops;
      who = name;
    }
  }
  if (s.best_learned.empty() || s.best_traditional.empty()) {
    throw std::invalid_argument("incomplete heatmap cell (" + std::string(to_string(cell.workload)) +
                                "): needs a learned and a traditional result");
  }
  s.winner_ratio = winner_ratio(best_l, best_t);
  return s;
}

void emit_heatmap(std::span<const HeatmapCell> cells, std::ostream& out) {
  out << kHeatmapHeader << '\n';
  for (const auto& cell : cells) {
    const auto s = summarize(cell);
    out << cell.global_h << ',' << cell.local_h << ',' << to_string(cell.workload);
    for (auto c : kColumns) {
      out << ',';
      if (auto it = cell.throughput_ops_s.find(std::string(c)); it != cell.throughput_ops_s.end()) {
        out << fixed(it->second, 1);
      }
    }
    out << ',' << s.best_learned << ',' << s.best_traditional << ',' << fixed(s.winner_ratio, 4) << '\n';
  }
}

}  // namespace lidx::bench
