#include "lidx/core/oracle.hpp"

#include <stdexcept>

namespace lidx {

void require_bulk_input(std::span<const KeyValue> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("bulk load needs at least one key");
  }
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i - 1].key >= pairs[i].key) {
      throw std::invalid_argument("bulk load input must be strictly increasing by key");
    }
  }
}

ReferenceOracle::ReferenceOracle(std::span<const KeyValue> initial) {
  for (const auto& kv : initial) {
    map_.insert_or_assign(kv.key, kv.payload);
  }
}

OpResult ReferenceOracle::apply(const Op& op) {
  OpResult result;
  switch (op.kind) {
    case OpKind::kLookup: {
      auto it = map_.find(op.key);
      result.ok = it != map_.end();
      if (result.ok) {
        result.payload = it->second;
      }
      break;
    }
    case OpKind::kInsert: {
      auto [it, inserted] = map_.insert_or_assign(op.key, op.arg);
      result.ok = inserted;
      break;
    }
    case OpKind::kRemove:
      result.ok = map_.erase(op.key) == 1;
      break;
    case OpKind::kScan: {
      auto it = map_.lower_bound(op.key);
      for (std::uint64_t n = 0; n < op.arg && it != map_.end(); ++n, ++it) {
        result.rows.push_back({it->first, it->second});
      }
      result.ok = true;
      break;
    }
  }
  return result;
}

std::vector<OpResult> oracle_apply(std::span<const Op> ops) {
  ReferenceOracle oracle;
  std::vector<OpResult> results;
  results.reserve(ops.size());
  for (const Op& op : ops) {
    results.push_back(oracle.apply(op));
  }
  return results;
}

OpResult apply_to_index(OrderedIndex& index, const Op& op) {
  OpResult result;
  switch (op.kind) {
    case OpKind::kLookup:
      result.payload = index.lookup(op.key);
      result.ok = result.payload.has_value();
      break;
    case OpKind::kInsert:
      result.ok = index.insert(op.key, op.arg);
      break;
    case OpKind::kRemove:
      result.ok = index.remove(op.key);
      break;
    case OpKind::kScan:
      index.range_scan(op.key, op.arg, result.rows);
      result.ok = true;
      break;
  }
  return result;
}

}  // namespace lidx
