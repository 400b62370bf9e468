#include "lidx/bench/report.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

namespace lidx::bench {

namespace {

using nlohmann::json;

json counters_json(const Counters& c) {
  return {
      {"lookups", c.lookups},
      {"inserts", c.inserts},
      {"updates", c.updates},
      {"removes", c.removes},
      {"scans", c.scans},
      {"nodes_traversed", c.nodes_traversed},
      {"keys_shifted", c.keys_shifted},
      {"nodes_created", c.nodes_created},
      {"smo_count", c.smo_count},
      {"retrain_count", c.retrain_count},
      {"key_comparisons", c.key_comparisons},
  };
}

std::string type_name(const json& j) {
  if (j.is_number()) {
    return "number";
  }
  return j.type_name();
}

void walk(const json& j, const std::string& path, std::set<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      walk(v, path.empty() ? k : path + "." + k, out);
    }
  } else if (j.is_array()) {
    if (j.empty()) {
      out.insert(path + "[]:empty");
    }
    for (const auto& v : j) {
      walk(v, path + "[]", out);
    }
  } else {
    out.insert(path + ":" + type_name(j));
  }
}

}  // namespace

std::string report_json(const RunReport& r) {
  json doc = {
      {"schema_version", kReportSchemaVersion},
      {"index", r.index},
      {"workload", r.workload},
      {"threads", r.threads},
      {"ops_per_repetition", r.ops_per_repetition},
      {"bulk_keys", r.bulk_keys},
      {"seed", r.seed},
      {"op_mix",
       {{"lookups", r.mix.lookups}, {"inserts", r.mix.inserts}, {"removes", r.mix.removes}, {"scans", r.mix.scans}}},
      {"throughput_ops_s", r.throughput_ops_s},
      {"repetitions",
       {{"throughput_ops_s", r.repetition_throughput_ops_s}, {"seconds", r.repetition_seconds}}},
      {"latency_ns",
       {{"samples", r.latency.samples},
        {"p50", r.latency.p50_ns},
        {"p99", r.latency.p99_ns},
        {"p999", r.latency.p999_ns},
        {"mean", r.latency.mean_ns},
        {"variance", r.latency.variance_ns2}}},
      {"counters", counters_json(r.counters)},
      {"memory_bytes_end", r.memory_bytes_end},
      {"keys_scanned", r.keys_scanned},
      {"keys_end", r.keys_end},
      {"key_set_digest", r.key_set_digest},
      {"verified", r.verified},
      {"failure", r.failure},
  };
  return doc.dump(2) + "\n";
}

std::vector<std::string> json_schema(std::string_view text) {
  std::set<std::string> paths;
  walk(json::parse(text), "", paths);
  return {paths.begin(), paths.end()};
}

}  // namespace lidx::bench
