#include "lidx/bench/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <toml.hpp>

#include "lidx/bench/factory.hpp"
#include "lidx/datagen/generator.hpp"
#include "lidx/pla/pla.hpp"

namespace lidx::bench {

Dataset scale_into_domain(const Dataset& from, Key lo, Key hi) {
  if (from.size() < 2) {
    throw std::invalid_argument("cannot scale a dataset with fewer than two keys");
  }
  if (lo > hi) {
    throw std::invalid_argument("empty target domain");
  }
  using U = unsigned __int128;
  const U src_min = from.front();
  const U src_width = from.back() - from.front();
  const U dst_width = hi - lo;
  std::vector<Key> out;
  out.reserve(from.size());
  for (Key k : from.keys()) {
    out.push_back(lo + static_cast<Key>((U{k} - src_min) * dst_width / src_width));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return Dataset::from_sorted_unique(std::move(out));
}

ShiftResult run_data_shift(const IndexFactory& factory, const Dataset& bulk_ds, const Dataset& insert_ds,
                           WorkloadSpec spec) {
  if (bulk_ds.size() < 2 || insert_ds.size() < 2) {
    throw std::invalid_argument("data shift needs at least two keys in each dataset");
  }
  spec.kind = WorkloadKind::kDataShift;
  spec.validate();

  std::vector<Key> keys(bulk_ds.keys().begin(), bulk_ds.keys().end());
  Rng rng(spec.seed);
  rng.shuffle(keys);
  const auto n_bulk = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(keys.size()) * spec.bulk_fraction)), 1,
      keys.size());
  std::vector<Key> bulk(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_bulk));
  std::vector<Key> own_inserts(keys.begin() + static_cast<std::ptrdiff_t>(n_bulk), keys.end());

  std::vector<Key> sorted_bulk = bulk;
  std::sort(sorted_bulk.begin(), sorted_bulk.end());
  const Dataset scaled = scale_into_domain(insert_ds, bulk_ds.front(), bulk_ds.back());
  std::vector<Key> shifted_inserts;
  shifted_inserts.reserve(scaled.size());
  for (Key k : scaled.keys()) {
    if (!std::binary_search(sorted_bulk.begin(), sorted_bulk.end(), k)) {
      shifted_inserts.push_back(k);
    }
  }
  rng.shuffle(shifted_inserts);

  ShiftResult result;
  result.shifted_pool = shifted_inserts.size();
  result.baseline = run(factory, spec, build_workload(spec, bulk, std::move(own_inserts)));
  result.shifted = run(factory, spec, build_workload(spec, std::move(bulk), std::move(shifted_inserts)));
  result.relative_change = result.shifted.throughput_ops_s / result.baseline.throughput_ops_s - 1.0;
  return result;
}

std::vector<RangePoint> run_range_sweep(OrderedIndex& index, const Dataset& dataset,
                                        std::span<const std::size_t> sizes, std::size_t scans_per_size,
                                        std::uint64_t seed, std::size_t oracle_every) {
  if (dataset.empty()) {
    throw std::invalid_argument("range sweep over an empty dataset");
  }
  std::vector<KeyValue> pairs;
  pairs.reserve(dataset.size());
  for (Key k : dataset.keys()) {
    pairs.push_back({k, payload_for(k)});
  }
  index.bulk_load(pairs);

  std::vector<RangePoint> points;
  std::vector<KeyValue> rows;
  for (std::size_t size : sizes) {
    Rng rng(seed + size);
    std::vector<std::size_t> starts(scans_per_size);
    for (auto& s : starts) {
      s = rng.uniform(0, dataset.size() - 1);
    }
    RangePoint p;
    p.scan_size = size;
    p.scans = scans_per_size;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < starts.size(); ++i) {
      p.keys += index.range_scan(dataset[starts[i]], size, rows);
      // Checks run inside the timed loop, so they are kept cheap except on
      // the sampled scans.
      if (rows.empty() || rows.front().key != dataset[starts[i]]) {
        ++p.unsorted;
      }
      if (oracle_every != 0 && i % oracle_every == 0) {
        ++p.oracle_checked;
        const std::size_t want = std::min(size, dataset.size() - starts[i]);
        bool same = rows.size() == want;
        for (std::size_t j = 0; same && j < want; ++j) {
          same = rows[j].key == dataset[starts[i] + j] && rows[j].payload == payload_for(rows[j].key);
        }
        if (!same) {
          ++p.oracle_mismatches;
        }
      }
      for (std::size_t j = 1; j < rows.size(); ++j) {
        if (rows[j - 1].key >= rows[j].key) {
          ++p.unsorted;
          break;
        }
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    p.seconds = std::max(1e-9, std::chrono::duration<double>(t1 - t0).count());
    p.keys_per_s = static_cast<double>(p.keys) / p.seconds;
    points.push_back(p);
  }
  return points;
}

namespace {

std::size_t positive(const toml::node& node, std::string_view key) {
  const auto v = node.value<std::int64_t>();
  if (!v || *v <= 0) {
    throw std::invalid_argument("plan: '" + std::string(key) + "' must be a positive integer");
  }
  return static_cast<std::size_t>(*v);
}

const toml::array& array_of(const toml::node& node, std::string_view key) {
  const auto* arr = node.as_array();
  if (arr == nullptr || arr->empty()) {
    throw std::invalid_argument("plan: '" + std::string(key) + "' must be a non-empty array");
  }
  return *arr;
}

std::string text(const toml::node& node, std::string_view key) {
  const auto v = node.value<std::string>();
  if (!v) {
    throw std::invalid_argument("plan: '" + std::string(key) + "' must hold strings");
  }
  return *v;
}

}  // namespace

HeatmapPlan parse_plan(std::string_view toml_text) {
  toml::table table;
  try {
    table = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(std::string("plan: ") + std::string(e.description()));
  }
  HeatmapPlan plan;
  for (const auto& [key, node] : table) {
    const std::string_view k = key.str();
    if (k == "n_keys") {
      plan.n_keys = positive(node, k);
    } else if (k == "ops") {
      plan.ops = positive(node, k);
    } else if (k == "threads") {
      plan.threads = positive(node, k);
    } else if (k == "repetitions") {
      plan.repetitions = positive(node, k);
    } else if (k == "seed") {
      const auto v = node.value<std::int64_t>();
      if (!v || *v < 0) {
        throw std::invalid_argument("plan: 'seed' must be a non-negative integer");
      }
      plan.seed = static_cast<std::uint64_t>(*v);
    } else if (k == "global" || k == "local") {
      auto& targets = k == "global" ? plan.global_targets : plan.local_targets;
      targets.clear();
      for (const auto& el : array_of(node, k)) {
        targets.push_back(positive(el, k));
      }
    } else if (k == "indexes") {
      plan.indexes.clear();
      for (const auto& el : array_of(node, k)) {
        auto name = text(el, k);
        make_index(name);
        plan.indexes.push_back(std::move(name));
      }
    } else if (k == "workloads") {
      plan.workloads.clear();
      for (const auto& el : array_of(node, k)) {
        const auto name = text(el, k);
        const auto kind = parse_workload(name);
        if (!kind) {
          throw std::invalid_argument("plan: unknown workload '" + name + "'");
        }
        plan.workloads.push_back(*kind);
      }
    } else {
      throw std::invalid_argument("plan: unknown key '" + std::string(k) + "'");
    }
  }
  return plan;
}

HeatmapPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open plan " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

std::vector<HeatmapCell> run_plan(const HeatmapPlan& plan, std::ostream* log) {
  std::vector<HeatmapCell> cells;
  for (std::size_t g : plan.global_targets) {
    for (std::size_t l : plan.local_targets) {
      datagen::GenSpec gen;
      gen.n_keys = plan.n_keys;
      gen.target_global = g;
      gen.target_local = l;
      gen.seed = plan.seed;
      const Dataset dataset = datagen::generate(gen);
      const auto h = pla::hardness_profile(dataset);
      if (log != nullptr) {
        *log << "dataset target (" << g << ", " << l << ") measured (" << h.global_h << ", " << h.local_h
             << ")\n";
      }
      for (WorkloadKind kind : plan.workloads) {
        HeatmapCell cell;
        cell.global_h = h.global_h;
        cell.local_h = h.local_h;
        cell.workload = kind;
        auto spec = WorkloadSpec::for_kind(kind);
        spec.op_count = plan.ops;
        spec.thread_count = plan.threads;
        spec.repetitions = plan.repetitions;
        spec.seed = plan.seed;
        const Workload workload = build_workload(spec, dataset);
        for (const auto& name : plan.indexes) {
          const auto report = run(make_factory(name), spec, workload);
          if (!report.verified) {
            throw std::runtime_error(name + " failed verification: " + report.failure);
          }
          cell.throughput_ops_s[name] = report.throughput_ops_s;
          if (log != nullptr) {
            *log << "  " << to_string(kind) << ' ' << name << ' ' << report.throughput_ops_s << " ops/s\n";
          }
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace lidx::bench
