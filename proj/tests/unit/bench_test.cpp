#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lidx/bench/experiments.hpp"
#include "lidx/bench/factory.hpp"
#include "lidx/bench/heatmap.hpp"
#include "lidx/bench/report.hpp"
#include "lidx/bench/runner.hpp"
#include "lidx/bench/workload.hpp"
#include "lidx/btree/btree.hpp"
#include "test_util.hpp"

#ifndef LIDX_GOLDEN_DIR
#error "LIDX_GOLDEN_DIR must point at tests/golden"
#endif

namespace lidx::bench {
namespace {

Dataset sample_dataset(std::size_t n, std::uint64_t seed = 9) {
  return Dataset::from_sorted_unique(lidx::testing::random_keys(n, seed));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in) << path;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) {
      lines.push_back(line);
    }
  }
  return lines;
}

TEST(Workload, NamesRoundTrip) {
  for (auto kind : all_workloads()) {
    EXPECT_EQ(parse_workload(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_workload("nope"));
}

TEST(Workload, ReadIntensiveSplitsEightyTwenty) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kReadIntensive);
  spec.op_count = 10'000;
  const auto w = build_workload(spec, sample_dataset(40'000));
  const auto mix = count_ops(w);
  EXPECT_EQ(mix.lookups, 8000u);
  EXPECT_EQ(mix.inserts, 2000u);
  EXPECT_EQ(mix.removes + mix.scans, 0u);
  EXPECT_EQ(w.bulk.size(), 20'000u);
}

TEST(Workload, ReadOnlyHasNoMutations) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kReadOnly);
  spec.op_count = 5000;
  spec.thread_count = 3;
  const auto mix = count_ops(build_workload(spec, sample_dataset(10'000)));
  EXPECT_EQ(mix.lookups, 5000u);
  EXPECT_EQ(mix.inserts + mix.removes + mix.scans, 0u);
}

TEST(Workload, MixesMatchRatiosUpToRounding) {
  const auto ds = sample_dataset(50'000);
  for (auto kind : all_workloads()) {
    auto spec = WorkloadSpec::for_kind(kind);
    spec.op_count = 9999;
    const auto mix = count_ops(build_workload(spec, ds));
    const std::size_t total = mix.lookups + mix.inserts + mix.removes + mix.scans;
    EXPECT_EQ(total, 9999u);
    if (kind == WorkloadKind::kRangeScan) {
      EXPECT_EQ(mix.scans, 9999u);
      continue;
    }
    const double want = spec.read_fraction * 9999;
    EXPECT_LE(std::abs(static_cast<double>(mix.lookups) - want), 1.0) << to_string(kind);
    if (kind == WorkloadKind::kDeleteMix) {
      EXPECT_EQ(mix.inserts, 0u);
    } else {
      EXPECT_EQ(mix.removes, 0u);
    }
  }
}

TEST(Workload, WritesAreSpreadEvenly) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kWriteHeavy);
  spec.op_count = 1000;
  const auto w = build_workload(spec, sample_dataset(4000));
  const auto& ops = w.per_thread[0];
  for (std::size_t start = 0; start + 100 <= ops.size(); start += 100) {
    const auto writes = std::count_if(ops.begin() + start, ops.begin() + start + 100,
                                      [](const Op& op) { return op.kind == OpKind::kInsert; });
    EXPECT_EQ(writes, 80);
  }
}

TEST(Workload, SameSeedSameStream) {
  const auto ds = sample_dataset(30'000);
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kZipfianMix);
  spec.op_count = 20'000;
  spec.thread_count = 4;
  const auto a = build_workload(spec, ds);
  const auto b = build_workload(spec, ds);
  EXPECT_EQ(a.bulk, b.bulk);
  EXPECT_EQ(a.per_thread, b.per_thread);
  spec.seed = 2;
  const auto c = build_workload(spec, ds);
  EXPECT_NE(a.per_thread, c.per_thread);
}

TEST(Workload, MutationsAreDisjointAcrossThreads) {
  for (auto kind : {WorkloadKind::kWriteOnly, WorkloadKind::kDeleteMix}) {
    auto spec = WorkloadSpec::for_kind(kind);
    spec.op_count = 8000;
    spec.thread_count = 8;
    const auto w = build_workload(spec, sample_dataset(20'000));
    std::set<Key> seen;
    std::size_t mutations = 0;
    for (const auto& ops : w.per_thread) {
      for (const Op& op : ops) {
        if (op.kind == OpKind::kInsert || op.kind == OpKind::kRemove) {
          ++mutations;
          EXPECT_TRUE(seen.insert(op.key).second);
        }
      }
    }
    EXPECT_GT(mutations, 0u);
  }
}

TEST(Workload, InsertsAreNewAndLookupsAreLoaded) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kBalanced);
  spec.op_count = 6000;
  const auto w = build_workload(spec, sample_dataset(20'000));
  std::set<Key> loaded;
  for (const auto& kv : w.bulk) {
    loaded.insert(kv.key);
    EXPECT_EQ(kv.payload, payload_for(kv.key));
  }
  EXPECT_TRUE(std::is_sorted(w.bulk.begin(), w.bulk.end(),
                             [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; }));
  for (const Op& op : w.per_thread[0]) {
    EXPECT_EQ(loaded.contains(op.key), op.kind == OpKind::kLookup);
  }
}

TEST(Workload, TooSmallDatasetIsRejected) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kWriteOnly);
  spec.op_count = 10'000;
  EXPECT_THROW(build_workload(spec, sample_dataset(1000)), std::invalid_argument);
  spec.op_count = 0;
  EXPECT_THROW(build_workload(spec, sample_dataset(1000)), std::invalid_argument);
  spec = WorkloadSpec::for_kind(WorkloadKind::kReadOnly);
  spec.read_fraction = 1.5;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Zipf, RankZeroIsMostPopularAndInRange) {
  ZipfGenerator zipf(1000, 0.99);
  Rng rng(3);
  std::vector<std::size_t> hits(1000);
  for (int i = 0; i < 200'000; ++i) {
    const auto r = zipf.next(rng);
    ASSERT_LT(r, 1000u);
    ++hits[r];
  }
  EXPECT_EQ(std::max_element(hits.begin(), hits.end()) - hits.begin(), 0);
  EXPECT_GT(hits[0], hits[1]);
  EXPECT_GT(hits[1], hits[10]);
  EXPECT_GT(hits[10], hits[500]);
  // Under theta 0.99 the top rank takes 1/zeta(n) of the mass, about 13%
  // for n = 1000.
  EXPECT_NEAR(hits[0] / 200'000.0, 0.134, 0.01);
}

TEST(Percentile, NearestRankOnOneToThousand) {
  std::vector<std::uint64_t> samples(1000);
  std::iota(samples.begin(), samples.end(), 1);
  std::reverse(samples.begin(), samples.end());
  const auto s = summarize_latencies(samples);
  EXPECT_EQ(s.p50_ns, 500u);
  EXPECT_EQ(s.p99_ns, 990u);
  // ceil(0.999 * 1000) = 999: nearest rank puts p99.9 on the 999th sample.
  EXPECT_EQ(s.p999_ns, 999u);
  EXPECT_DOUBLE_EQ(s.mean_ns, 500.5);
  EXPECT_NEAR(s.variance_ns2, (1000.0 * 1000.0 - 1.0) / 12.0, 1e-6);
}

TEST(Percentile, SmallSamplesAndOrdering) {
  std::vector<std::uint64_t> one{42};
  EXPECT_EQ(nearest_rank(one, 0.5), 42u);
  EXPECT_EQ(nearest_rank(one, 0.999), 42u);
  Rng rng(5);
  std::vector<std::uint64_t> v(777);
  for (auto& x : v) {
    x = rng.uniform(0, 1'000'000);
  }
  const auto s = summarize_latencies(v);
  EXPECT_LE(s.p50_ns, s.p99_ns);
  EXPECT_LE(s.p99_ns, s.p999_ns);
  EXPECT_EQ(summarize_latencies({}).samples, 0u);
  EXPECT_THROW(nearest_rank(one, 0.0), std::invalid_argument);
}

TEST(Runner, ReadOnlyReportIsOrderedAndVerified) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kReadOnly);
  spec.op_count = 50'000;
  spec.repetitions = 3;
  for (auto name : {"gapped", "chain", "btree"}) {
    const auto r = run(make_factory(name), spec, sample_dataset(100'000));
    EXPECT_TRUE(r.verified) << name << ": " << r.failure;
    EXPECT_EQ(r.repetition_throughput_ops_s.size(), 3u);
    const double mean = (r.repetition_throughput_ops_s[0] + r.repetition_throughput_ops_s[1] +
                         r.repetition_throughput_ops_s[2]) / 3.0;
    EXPECT_DOUBLE_EQ(r.throughput_ops_s, mean);
    EXPECT_GT(r.throughput_ops_s, 0.0);
    EXPECT_LE(r.latency.p50_ns, r.latency.p99_ns);
    EXPECT_LE(r.latency.p99_ns, r.latency.p999_ns);
    EXPECT_EQ(r.latency.samples, 3u * 500u);
    EXPECT_EQ(r.counters.lookups, 50'000u);
    EXPECT_EQ(r.keys_end, 50'000u);
    EXPECT_GE(r.memory_bytes_end, r.keys_end * 16);
  }
}

TEST(Runner, EveryIndexEndsWithTheOracleKeySet) {
  const auto ds = sample_dataset(60'000);
  for (auto kind : {WorkloadKind::kBalanced, WorkloadKind::kDeleteMix, WorkloadKind::kRangeScan}) {
    auto spec = WorkloadSpec::for_kind(kind);
    spec.op_count = 20'000;
    spec.thread_count = 4;
    spec.repetitions = 1;
    spec.scan_size = 50;
    std::set<std::uint64_t> digests;
    const auto w = build_workload(spec, ds);
    for (auto name : {"gapped", "chain", "btree"}) {
      const auto r = run(make_factory(name), spec, w);
      EXPECT_TRUE(r.verified) << name << ' ' << to_string(kind) << ": " << r.failure;
      EXPECT_EQ(r.keys_end, expected_contents(w).size());
      digests.insert(r.key_set_digest);
    }
    EXPECT_EQ(digests.size(), 1u) << to_string(kind);
  }
}

TEST(Runner, DetectsABrokenIndex) {
  struct Lossy final : OrderedIndex {
    btree::BTree inner;
    void bulk_load(std::span<const KeyValue> p) override { inner.bulk_load(p); }
    std::optional<Payload> lookup(Key k) const override { return inner.lookup(k); }
    bool insert(Key k, Payload v) override { return k % 97 == 0 ? false : inner.insert(k, v); }
    bool remove(Key k) override { return inner.remove(k); }
    std::size_t range_scan(Key s, std::size_t c, std::vector<KeyValue>& o) const override {
      return inner.range_scan(s, c, o);
    }
    std::size_t size_in_bytes() const override { return inner.size_in_bytes(); }
    Counters op_stats() const override { return inner.op_stats(); }
    std::string_view name() const override { return "lossy"; }
  };
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kWriteOnly);
  spec.op_count = 10'000;
  spec.repetitions = 1;
  const auto r = run([] { return std::make_unique<Lossy>(); }, spec, sample_dataset(30'000));
  EXPECT_FALSE(r.verified);
  EXPECT_NE(r.failure.find("diverge"), std::string::npos);
}

TEST(Runner, DigestIsOrderSensitive) {
  std::vector<KeyValue> a{{1, 2}, {3, 4}};
  std::vector<KeyValue> b{{1, 4}, {3, 2}};
  EXPECT_NE(digest(a), digest(b));
  EXPECT_EQ(digest(a), digest(std::vector<KeyValue>{{1, 2}, {3, 4}}));
}

TEST(Report, JsonMatchesGoldenSchema) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kReadIntensive);
  spec.op_count = 2000;
  spec.repetitions = 2;
  const auto r = run(make_factory("gapped"), spec, sample_dataset(10'000));
  const auto schema = json_schema(report_json(r));
  EXPECT_EQ(schema, read_lines(std::string(LIDX_GOLDEN_DIR) + "/report_schema.txt"));
}

TEST(Heatmap, WinnerRatioSigns) {
  EXPECT_DOUBLE_EQ(winner_ratio(300, 100), 3.0);
  EXPECT_DOUBLE_EQ(winner_ratio(100, 250), -2.5);
  EXPECT_DOUBLE_EQ(winner_ratio(7, 7), 1.0);
  EXPECT_THROW(winner_ratio(0, 1), std::invalid_argument);
}

TEST(Heatmap, PicksBestOfEachFamily) {
  HeatmapCell cell{4, 64, WorkloadKind::kBalanced, {{"gapped", 100}, {"chain", 300}, {"btree", 150}}};
  const auto s = summarize(cell);
  EXPECT_EQ(s.best_learned, "chain");
  EXPECT_EQ(s.best_traditional, "btree");
  EXPECT_DOUBLE_EQ(s.winner_ratio, 2.0);
}

TEST(Heatmap, IncompleteCellThrows) {
  HeatmapCell learned_only{1, 1, WorkloadKind::kReadOnly, {{"gapped", 1}, {"chain", 2}}};
  EXPECT_THROW(summarize(learned_only), std::invalid_argument);
  HeatmapCell traditional_only{1, 1, WorkloadKind::kReadOnly, {{"btree", 1}}};
  EXPECT_THROW(summarize(traditional_only), std::invalid_argument);
  HeatmapCell unknown{1, 1, WorkloadKind::kReadOnly, {{"gapped", 1}, {"btree", 1}, {"art", 1}}};
  EXPECT_THROW(summarize(unknown), std::invalid_argument);
}

TEST(Heatmap, CsvMatchesGolden) {
  std::vector<HeatmapCell> cells{
      {2, 8, WorkloadKind::kReadOnly, {{"gapped", 2000000}, {"chain", 2500000}, {"btree", 1000000}}},
      {32, 256, WorkloadKind::kWriteOnly, {{"gapped", 500000}, {"btree", 800000}}},
      {8, 64, WorkloadKind::kBalanced, {{"chain", 1000}, {"btree", 1000}}},
  };
  std::ostringstream out;
  emit_heatmap(cells, out);
  std::vector<std::string> lines;
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) {
    lines.push_back(line);
  }
  EXPECT_EQ(lines, read_lines(std::string(LIDX_GOLDEN_DIR) + "/heatmap.csv"));
  EXPECT_EQ(lines.front(), kHeatmapHeader);
}

TEST(Plan, ParsesAndRejects) {
  const auto plan = parse_plan(R"(
n_keys = 50000
ops = 1000
threads = 2
seed = 4
global = [1, 2]
local = [8]
indexes = ["gapped", "btree"]
workloads = ["read_only", "delete_mix"]
)");
  EXPECT_EQ(plan.n_keys, 50'000u);
  EXPECT_EQ(plan.threads, 2u);
  EXPECT_EQ(plan.global_targets, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(plan.indexes, (std::vector<std::string>{"gapped", "btree"}));
  EXPECT_EQ(plan.workloads, (std::vector<WorkloadKind>{WorkloadKind::kReadOnly, WorkloadKind::kDeleteMix}));
  EXPECT_THROW(parse_plan("colour = 3"), std::invalid_argument);
  EXPECT_THROW(parse_plan("indexes = [\"hash\"]"), std::invalid_argument);
  EXPECT_THROW(parse_plan("ops = -1"), std::invalid_argument);
  EXPECT_THROW(parse_plan("ops = "), std::invalid_argument);
}

TEST(Plan, SmallGridProducesCells) {
  HeatmapPlan plan;
  plan.n_keys = 20'000;
  plan.ops = 2000;
  plan.global_targets = {1};
  plan.local_targets = {4, 8};
  plan.workloads = {WorkloadKind::kReadOnly, WorkloadKind::kWriteOnly};
  const auto cells = run_plan(plan);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].global_h, 1u);
  EXPECT_EQ(cells[0].local_h, 4u);
  EXPECT_EQ(cells[2].local_h, 8u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.throughput_ops_s.size(), 3u);
    EXPECT_NO_THROW(summarize(c));
  }
}

TEST(DataShift, ScaledKeysStayInDomain) {
  const auto from = sample_dataset(5000, 11);
  const auto scaled = scale_into_domain(from, 1'000'000, 1'001'000);
  EXPECT_EQ(scaled.front(), 1'000'000u);
  EXPECT_EQ(scaled.back(), 1'001'000u);
  EXPECT_LE(scaled.size(), 1001u);
  for (Key k : scaled.keys()) {
    EXPECT_GE(k, 1'000'000u);
    EXPECT_LE(k, 1'001'000u);
  }
  const auto wide = scale_into_domain(from, 0, ~Key{0});
  EXPECT_EQ(wide.size(), from.size());
  EXPECT_EQ(wide.back(), ~Key{0});
  EXPECT_THROW(scale_into_domain(Dataset::from_sorted_unique({5}), 0, 10), std::invalid_argument);
}

TEST(DataShift, RunsBothPhases) {
  auto spec = WorkloadSpec::for_kind(WorkloadKind::kDataShift);
  spec.op_count = 10'000;
  spec.repetitions = 1;
  const auto r = run_data_shift(make_factory("gapped"), sample_dataset(40'000, 1), sample_dataset(40'000, 2), spec);
  EXPECT_TRUE(r.baseline.verified) << r.baseline.failure;
  EXPECT_TRUE(r.shifted.verified) << r.shifted.failure;
  EXPECT_EQ(r.baseline.mix, r.shifted.mix);
  EXPECT_GT(r.shifted_pool, 5000u);
  EXPECT_DOUBLE_EQ(r.relative_change, r.shifted.throughput_ops_s / r.baseline.throughput_ops_s - 1.0);
}

TEST(RangeSweep, ScansAreSortedAndMatchTheDataset) {
  const auto ds = sample_dataset(50'000);
  for (auto name : {"gapped", "chain", "btree"}) {
    auto index = make_index(name);
    const auto points = run_range_sweep(*index, ds, kDefaultScanSizes, 500, 3, 10);
    ASSERT_EQ(points.size(), 4u);
    for (const auto& p : points) {
      EXPECT_EQ(p.unsorted, 0u) << name;
      EXPECT_EQ(p.oracle_checked, 50u);
      EXPECT_EQ(p.oracle_mismatches, 0u) << name << " size " << p.scan_size;
      EXPECT_GT(p.keys_per_s, 0.0);
    }
  }
}

}  // namespace
}  // namespace lidx::bench
