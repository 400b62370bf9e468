#include "lidx/bench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <latch>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "lidx/core/oracle.hpp"

namespace lidx::bench {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

struct WorkerResult {
  std::vector<std::uint64_t> latencies;
  std::uint64_t keys_scanned = 0;
  std::size_t bad_lookups = 0;
  std::size_t unsorted_scans = 0;
  Key first_bad_key = 0;
};

class Worker {
 public:
  Worker(OrderedIndex& index, std::span<const Op> ops, std::size_t sample_every,
         const std::unordered_set<Key>& removed)
      : index_(index), ops_(ops), sample_every_(sample_every), removed_(removed) {}

  void operator()(WorkerResult& result) {
    result.latencies.reserve(sample_every_ ? ops_.size() / sample_every_ + 1 : 0);
    std::size_t countdown = 0;
    for (const Op& op : ops_) {
      if (sample_every_ != 0 && countdown == 0) {
        const auto t0 = Clock::now();
        execute(op, result);
        const auto t1 = Clock::now();
        result.latencies.push_back(elapsed_ns(t0, t1));
        countdown = sample_every_;
      } else {
        execute(op, result);
      }
      --countdown;
    }
  }

 private:
  void execute(const Op& op, WorkerResult& result) {
    switch (op.kind) {
      case OpKind::kLookup: {
        const auto found = index_.lookup(op.key);
        if ((!found || *found != payload_for(op.key)) && !removed_.contains(op.key)) {
          if (result.bad_lookups++ == 0) {
            result.first_bad_key = op.key;
          }
        }
        break;
      }
      case OpKind::kInsert:
        index_.insert(op.key, op.arg);
        break;
      case OpKind::kRemove:
        index_.remove(op.key);
        break;
      case OpKind::kScan: {
        const std::size_t got = index_.range_scan(op.key, op.arg, rows_);
        result.keys_scanned += got;
        if (!rows_.empty() && rows_.front().key < op.key) {
          ++result.unsorted_scans;
        }
        for (std::size_t i = 1; i < rows_.size(); ++i) {
          if (rows_[i - 1].key >= rows_[i].key) {
            ++result.unsorted_scans;
            break;
          }
        }
        break;
      }
    }
  }

  OrderedIndex& index_;
  std::span<const Op> ops_;
  std::size_t sample_every_;
  const std::unordered_set<Key>& removed_;
  std::vector<KeyValue> rows_;
};

}  // namespace

std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double q) {
  if (sorted.empty() || !(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("nearest_rank needs samples and q in (0, 1]");
  }
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencySummary summarize_latencies(std::vector<std::uint64_t> samples_ns) {
  LatencySummary s;
  if (samples_ns.empty()) {
    return s;
  }
  std::sort(samples_ns.begin(), samples_ns.end());
  s.samples = samples_ns.size();
  s.p50_ns = nearest_rank(samples_ns, 0.50);
  s.p99_ns = nearest_rank(samples_ns, 0.99);
  s.p999_ns = nearest_rank(samples_ns, 0.999);
  long double sum = 0;
  for (auto v : samples_ns) {
    sum += v;
  }
  const long double mean = sum / samples_ns.size();
  long double sq = 0;
  for (auto v : samples_ns) {
    sq += (v - mean) * (v - mean);
  }
  s.mean_ns = static_cast<double>(mean);
  s.variance_ns2 = static_cast<double>(sq / samples_ns.size());
  return s;
}

OpMix count_ops(const Workload& workload) {
  OpMix mix;
  for (const auto& ops : workload.per_thread) {
    for (const Op& op : ops) {
      switch (op.kind) {
        case OpKind::kLookup: ++mix.lookups; break;
        case OpKind::kInsert: ++mix.inserts; break;
        case OpKind::kRemove: ++mix.removes; break;
        case OpKind::kScan: ++mix.scans; break;
      }
    }
  }
  return mix;
}

std::uint64_t digest(std::span<const KeyValue> rows) {
  // FNV-1a over the little-endian bytes of each key and payload.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : rows) {
    mix(k);
    mix(v);
  }
  return h;
}

std::vector<KeyValue> expected_contents(const Workload& workload) {
  ReferenceOracle oracle(workload.bulk);
  for (const auto& ops : workload.per_thread) {
    for (const Op& op : ops) {
      if (op.kind == OpKind::kInsert || op.kind == OpKind::kRemove) {
        oracle.apply(op);
      }
    }
  }
  std::vector<KeyValue> out;
  out.reserve(oracle.contents().size());
  for (const auto& [k, v] : oracle.contents()) {
    out.push_back({k, v});
  }
  return out;
}

RunReport run(const IndexFactory& factory, const WorkloadSpec& spec, const Workload& workload) {
  spec.validate();
  if (workload.per_thread.empty() || workload.bulk.empty()) {
    throw std::invalid_argument("empty workload");
  }
  RunReport report;
  report.workload = std::string(to_string(spec.kind));
  report.threads = workload.per_thread.size();
  report.ops_per_repetition = workload.total_ops();
  report.bulk_keys = workload.bulk.size();
  report.seed = spec.seed;
  report.mix = count_ops(workload);
  report.verified = true;

  std::unordered_set<Key> removed;
  for (const auto& ops : workload.per_thread) {
    for (const Op& op : ops) {
      if (op.kind == OpKind::kRemove) {
        removed.insert(op.key);
      }
    }
  }
  const auto expected = expected_contents(workload);
  const std::size_t sample_every =
      spec.latency_sample_rate > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / spec.latency_sample_rate)))
          : 0;

  std::vector<std::uint64_t> all_latencies;
  auto fail = [&report](std::string why) {
    if (report.verified) {
      report.failure = std::move(why);
    }
    report.verified = false;
  };

  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    auto index = factory();
    report.index = std::string(index->name());
    index->bulk_load(workload.bulk);
    const Counters before = index->op_stats();

    const std::size_t t = workload.per_thread.size();
    std::vector<WorkerResult> results(t);
    std::latch ready(static_cast<std::ptrdiff_t>(t) + 1);
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    threads.reserve(t);
    for (std::size_t i = 0; i < t; ++i) {
      threads.emplace_back([&, i] {
        Worker worker(*index, workload.per_thread[i], sample_every, removed);
        ready.count_down();
        while (!go.load(std::memory_order_acquire)) {
          std::this_thread::yield();
        }
        worker(results[i]);
      });
    }
    ready.arrive_and_wait();
    const auto start = Clock::now();
    go.store(true, std::memory_order_release);
    for (auto& th : threads) {
      th.join();
    }
    const auto stop = Clock::now();

    const double seconds = std::max(1e-9, static_cast<double>(elapsed_ns(start, stop)) * 1e-9);
    report.repetition_seconds.push_back(seconds);
    report.repetition_throughput_ops_s.push_back(static_cast<double>(report.ops_per_repetition) / seconds);
    report.counters = index->op_stats() - before;
    report.memory_bytes_end = index->size_in_bytes();
    report.keys_scanned = 0;
    for (auto& r : results) {
      report.keys_scanned += r.keys_scanned;
      all_latencies.insert(all_latencies.end(), r.latencies.begin(), r.latencies.end());
      if (r.bad_lookups != 0) {
        fail(std::to_string(r.bad_lookups) + " lookups returned a wrong payload, first key " +
             std::to_string(r.first_bad_key));
      }
      if (r.unsorted_scans != 0) {
        fail(std::to_string(r.unsorted_scans) + " scans returned rows out of order");
      }
    }

    const auto contents = index->range_scan(0, expected.size() + 1);
    report.keys_end = contents.size();
    report.key_set_digest = digest(contents);
    if (contents != expected) {
      std::size_t i = 0;
      while (i < contents.size() && i < expected.size() && contents[i] == expected[i]) {
        ++i;
      }
      fail("end-of-run contents diverge from the oracle at row " + std::to_string(i) + " (index holds " +
           std::to_string(contents.size()) + " keys, oracle " + std::to_string(expected.size()) + ")");
    }
  }

  double sum = 0.0;
  for (double x : report.repetition_throughput_ops_s) {
    sum += x;
  }
  report.throughput_ops_s = sum / static_cast<double>(report.repetition_throughput_ops_s.size());
  report.latency = summarize_latencies(std::move(all_latencies));
  return report;
}

RunReport run(const IndexFactory& factory, const WorkloadSpec& spec, const Dataset& dataset) {
  return run(factory, spec, build_workload(spec, dataset));
}

}  // namespace lidx::bench
