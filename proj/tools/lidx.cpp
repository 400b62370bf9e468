// Command-line front end: dataset generation, hardness measurement and
// benchmarks.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "lidx/bench/experiments.hpp"
#include "lidx/bench/factory.hpp"
#include "lidx/bench/heatmap.hpp"
#include "lidx/bench/report.hpp"
#include "lidx/core/dataset_io.hpp"
#include "lidx/datagen/generator.hpp"
#include "lidx/pla/pla.hpp"

namespace {

using namespace lidx;

struct DataSource {
  std::string keys_file;
  std::string gen;  // "G,L,N"
  std::uint64_t seed = 1;

  void add_options(CLI::App* app) {
    auto* keys = app->add_option("--keys", keys_file, "binary key file (u64 count, then u64 keys)");
    auto* g = app->add_option("--gen", gen, "generate G,L,N: global and local hardness targets, key count");
    keys->excludes(g);
  }

  Dataset load() const {
    if (!keys_file.empty()) {
      return load_dataset(keys_file);
    }
    if (gen.empty()) {
      throw CLI::ValidationError("need --keys or --gen");
    }
    datagen::GenSpec spec;
    char tail = 0;
    std::istringstream in(gen);
    char c1 = 0;
    char c2 = 0;
    if (!(in >> spec.target_global >> c1 >> spec.target_local >> c2 >> spec.n_keys) || c1 != ',' ||
        c2 != ',' || (in >> tail)) {
      throw CLI::ValidationError("--gen expects G,L,N");
    }
    spec.seed = seed;
    return datagen::generate(spec);
  }
};

void write_text(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lidx: updatable learned index experiments"};
  app.require_subcommand(1);

  DataSource hard_src;
  auto* hardness = app.add_subcommand("hardness", "print PLA hardness (global at eps 4096, local at eps 32)");
  hard_src.add_options(hardness);
  hardness->add_option("--seed", hard_src.seed, "generator seed");

  DataSource gen_src;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "write a generated dataset");
  gen_src.add_options(generate);
  generate->add_option("--seed", gen_src.seed, "generator seed");
  generate->add_option("--out", gen_out, "output key file")->required();

  auto* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);

  DataSource run_src;
  std::string index_name = "gapped";
  std::string workload_name = "read_intensive";
  auto spec = bench::WorkloadSpec{};
  std::string run_out;
  auto* run = bench->add_subcommand("run", "run one workload against one index");
  run_src.add_options(run);
  run->add_option("--index", index_name, "gapped | gapped-m | chain | btree");
  run->add_option("--workload", workload_name, "workload kind");
  run->add_option("--threads", spec.thread_count, "worker threads");
  run->add_option("--ops", spec.op_count, "operations per repetition");
  run->add_option("--repetitions", spec.repetitions, "fresh-index repetitions");
  run->add_option("--sample-rate", spec.latency_sample_rate, "share of ops timed individually");
  run->add_option("--scan-size", spec.scan_size, "rows per range_scan op");
  run->add_option("--seed", run_src.seed, "workload and generator seed");
  run->add_option("--out", run_out, "report JSON path (stdout if omitted)");

  std::string plan_path;
  std::string heatmap_out;
  auto* heatmap = bench->add_subcommand("heatmap", "run a hardness x workload grid");
  heatmap->add_option("--plan", plan_path, "TOML plan")->required();
  heatmap->add_option("--out", heatmap_out, "CSV path (stdout if omitted)");

  DataSource range_src;
  std::string range_index = "btree";
  std::size_t range_scans = 10'000;
  auto* range = bench->add_subcommand("range", "keys/s for scan sizes 10 to 10000");
  range_src.add_options(range);
  range->add_option("--index", range_index, "index name");
  range->add_option("--scans", range_scans, "scans per size");
  range->add_option("--seed", range_src.seed, "seed");

  DataSource shift_bulk;
  DataSource shift_ins;
  std::string shift_index = "gapped";
  std::size_t shift_ops = 200'000;
  auto* shift = bench->add_subcommand("shift", "balanced workload with inserts from another distribution");
  shift->add_option("--index", shift_index, "index name");
  shift->add_option("--bulk-gen", shift_bulk.gen, "bulk dataset G,L,N")->required();
  shift->add_option("--insert-gen", shift_ins.gen, "insert dataset G,L,N")->required();
  shift->add_option("--ops", shift_ops, "operations");
  shift->add_option("--seed", shift_bulk.seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*hardness) {
      const auto h = pla::hardness_profile(hard_src.load());
      std::cout << "global_h " << h.global_h << "\nlocal_h " << h.local_h << "\n";
    } else if (*generate) {
      const Dataset ds = gen_src.load();
      save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.size() << " keys to " << gen_out << "\n";
    } else if (*run) {
      const auto kind = bench::parse_workload(workload_name);
      if (!kind) {
        throw std::invalid_argument("unknown workload '" + workload_name + "'");
      }
      auto s = bench::WorkloadSpec::for_kind(*kind);
      s.thread_count = spec.thread_count;
      s.op_count = spec.op_count;
      s.repetitions = spec.repetitions;
      s.latency_sample_rate = spec.latency_sample_rate;
      s.scan_size = spec.scan_size;
      s.seed = run_src.seed;
      auto report = bench::run(bench::make_factory(index_name), s, run_src.load());
      report.index = index_name;
      write_text(run_out, bench::report_json(report));
      if (!report.verified) {
        std::cerr << "verification failed: " << report.failure << "\n";
        return 2;
      }
    } else if (*heatmap) {
      const auto cells = bench::run_plan(bench::load_plan(plan_path), &std::cerr);
      std::ostringstream csv;
      bench::emit_heatmap(cells, csv);
      write_text(heatmap_out, csv.str());
    } else if (*range) {
      auto index = bench::make_index(range_index);
      const auto points = bench::run_range_sweep(*index, range_src.load(), bench::kDefaultScanSizes, range_scans,
                                                 range_src.seed);
      std::cout << "scan_size,keys_per_s,unsorted,oracle_mismatches\n";
      for (const auto& p : points) {
        std::printf("%zu,%.1f,%zu,%zu\n", p.scan_size, p.keys_per_s, p.unsorted, p.oracle_mismatches);
      }
    } else if (*shift) {
      shift_ins.seed = shift_bulk.seed + 1;
      auto s = bench::WorkloadSpec::for_kind(bench::WorkloadKind::kDataShift);
      s.op_count = shift_ops;
      s.repetitions = 1;
      s.seed = shift_bulk.seed;
      const auto r = bench::run_data_shift(bench::make_factory(shift_index), shift_bulk.load(), shift_ins.load(), s);
      std::printf("baseline_ops_s %.1f\nshifted_ops_s %.1f\nrelative_change %.4f\n", r.baseline.throughput_ops_s,
                  r.shifted.throughput_ops_s, r.relative_change);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
