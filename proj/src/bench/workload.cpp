#include "lidx/bench/workload.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lidx::bench {

namespace {

struct KindName {
  WorkloadKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 9> kNames{{
    {WorkloadKind::kReadOnly, "read_only"},
    {WorkloadKind::kReadIntensive, "read_intensive"},
    {WorkloadKind::kBalanced, "balanced"},
    {WorkloadKind::kWriteHeavy, "write_heavy"},
    {WorkloadKind::kWriteOnly, "write_only"},
    {WorkloadKind::kDeleteMix, "delete_mix"},
    {WorkloadKind::kRangeScan, "range_scan"},
    {WorkloadKind::kDataShift, "data_shift"},
    {WorkloadKind::kZipfianMix, "zipfian_mix"},
}};

}  // namespace

std::string_view to_string(WorkloadKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) {
      return name;
    }
  }
  return "unknown";
}

std::optional<WorkloadKind> parse_workload(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) {
      return k;
    }
  }
  return std::nullopt;
}

std::vector<WorkloadKind> all_workloads() {
  std::vector<WorkloadKind> kinds;
  for (const auto& entry : kNames) {
    kinds.push_back(entry.kind);
  }
  return kinds;
}

WorkloadSpec WorkloadSpec::for_kind(WorkloadKind kind) {
  WorkloadSpec spec;
  spec.kind = kind;
  switch (kind) {
    case WorkloadKind::kReadOnly:
    case WorkloadKind::kRangeScan:
      spec.read_fraction = 1.0;
      break;
    case WorkloadKind::kReadIntensive:
    case WorkloadKind::kZipfianMix:
      spec.read_fraction = 0.8;
      break;
    case WorkloadKind::kBalanced:
    case WorkloadKind::kDataShift:
    case WorkloadKind::kDeleteMix:
      spec.read_fraction = 0.5;
      break;
    case WorkloadKind::kWriteHeavy:
      spec.read_fraction = 0.2;
      break;
    case WorkloadKind::kWriteOnly:
      spec.read_fraction = 0.0;
      break;
  }
  return spec;
}

void WorkloadSpec::validate() const {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(read_fraction) || !in_unit(latency_sample_rate)) {
    throw std::invalid_argument("fractions must lie in [0, 1]");
  }
  if (!(bulk_fraction > 0.0 && bulk_fraction <= 1.0)) {
    throw std::invalid_argument("bulk_fraction must lie in (0, 1]");
  }
  if (op_count == 0) {
    throw std::invalid_argument("op_count must be positive");
  }
  if (thread_count == 0 || repetitions == 0) {
    throw std::invalid_argument("thread_count and repetitions must be positive");
  }
  if (kind == WorkloadKind::kRangeScan && scan_size == 0) {
    throw std::invalid_argument("scan_size must be positive");
  }
  if (!(zipf_theta > 0.0 && zipf_theta < 1.0)) {
    throw std::invalid_argument("zipf_theta must lie in (0, 1)");
  }
}

std::size_t Workload::total_ops() const {
  std::size_t total = 0;
  for (const auto& ops : per_thread) {
    total += ops.size();
  }
  return total;
}

ZipfGenerator::ZipfGenerator(std::size_t n, double theta) : n_(n), theta_(theta) {
  if (n == 0) {
    throw std::invalid_argument("zipf over an empty range");
  }
  zetan_ = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    zetan_ += 1.0 / std::pow(static_cast<double>(i), theta);
  }
  const double zeta2 = 1.0 + std::pow(0.5, theta);
  alpha_ = 1.0 / (1.0 - theta);
  eta_ = (1.0 - std::pow(2.0 / static_cast<double>(n), 1.0 - theta)) / (1.0 - zeta2 / zetan_);
}

std::size_t ZipfGenerator::next(Rng& rng) const {
  const double u = rng.uniform01();
  const double uz = u * zetan_;
  if (uz < 1.0 || n_ == 1) {
    return 0;
  }
  if (uz < 1.0 + std::pow(0.5, theta_)) {
    return 1;
  }
  const auto rank =
      static_cast<std::size_t>(static_cast<double>(n_) * std::pow(eta_ * u - eta_ + 1.0, alpha_));
  return std::min(rank, n_ - 1);
}

Workload build_workload(const WorkloadSpec& spec, const Dataset& dataset) {
  spec.validate();
  std::vector<Key> keys(dataset.keys().begin(), dataset.keys().end());
  Rng rng(spec.seed);
  rng.shuffle(keys);
  const auto n_bulk = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(keys.size()) * spec.bulk_fraction)), 1,
      keys.size());
  std::vector<Key> inserts(keys.begin() + static_cast<std::ptrdiff_t>(n_bulk), keys.end());
  keys.resize(n_bulk);
  return build_workload(spec, std::move(keys), std::move(inserts));
}

Workload build_workload(const WorkloadSpec& spec, std::vector<Key> bulk_keys, std::vector<Key> insert_keys) {
  spec.validate();
  if (bulk_keys.empty()) {
    throw std::invalid_argument("workload needs at least one bulk-loaded key");
  }
  // `hot` keeps the caller's (shuffled) order: it maps popularity ranks and
  // removal order to keys.
  const std::vector<Key> hot = bulk_keys;
  std::sort(bulk_keys.begin(), bulk_keys.end());

  Workload w;
  w.bulk.reserve(bulk_keys.size());
  for (Key k : bulk_keys) {
    w.bulk.push_back({k, payload_for(k)});
  }

  const std::size_t n = spec.op_count;
  const bool scans = spec.kind == WorkloadKind::kRangeScan;
  const bool removes = spec.kind == WorkloadKind::kDeleteMix;
  const std::size_t reads =
      scans ? n : static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.read_fraction));
  const std::size_t writes = n - reads;
  const std::size_t pool = removes ? hot.size() : insert_keys.size();
  if (writes > pool) {
    throw std::invalid_argument("dataset too small: workload needs " + std::to_string(writes) + " " +
                                (removes ? "removable" : "insertable") + " keys, has " +
                                std::to_string(pool));
  }

  Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  std::optional<ZipfGenerator> zipf;
  if (spec.kind == WorkloadKind::kZipfianMix) {
    zipf.emplace(hot.size(), spec.zipf_theta);
  }

  w.per_thread.assign(spec.thread_count, {});
  for (auto& ops : w.per_thread) {
    ops.reserve(n / spec.thread_count + 1);
  }
  std::size_t next_write = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Op op;
    const bool is_write = ((i + 1) * writes) / n > (i * writes) / n;
    if (is_write) {
      if (removes) {
        op.kind = OpKind::kRemove;
        op.key = hot[next_write++];
      } else {
        op.kind = OpKind::kInsert;
        op.key = insert_keys[next_write++];
        op.arg = payload_for(op.key);
      }
    } else {
      const std::size_t rank = zipf ? zipf->next(rng) : rng.uniform(0, hot.size() - 1);
      op.key = hot[rank];
      if (scans) {
        op.kind = OpKind::kScan;
        op.arg = spec.scan_size;
      } else {
        op.kind = OpKind::kLookup;
      }
    }
    w.per_thread[i % spec.thread_count].push_back(op);
  }
  return w;
}

}  // namespace lidx::bench
