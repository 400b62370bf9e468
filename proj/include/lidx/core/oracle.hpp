#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lidx/core/ordered_index.hpp"

namespace lidx {

enum class OpKind : std::uint8_t { kLookup, kInsert, kRemove, kScan };

/// One request against an index. `arg` is the payload for inserts and the
/// scan length for scans; it is ignored otherwise.
struct Op {
  OpKind kind = OpKind::kLookup;
  Key key = 0;
  std::uint64_t arg = 0;

  friend bool operator==(const Op&, const Op&) = default;
};

struct OpResult {
  bool ok = false;                 // insert: newly inserted; remove: existed; lookup: found
  std::optional<Payload> payload;  // lookup only
  std::vector<KeyValue> rows;      // scan only

  friend bool operator==(const OpResult&, const OpResult&) = default;
};

/// Reference ordered map used to check index implementations. Single-threaded.
class ReferenceOracle {
 public:
  ReferenceOracle() = default;
  explicit ReferenceOracle(std::span<const KeyValue> initial);

  OpResult apply(const Op& op);
  const std::map<Key, Payload>& contents() const noexcept { return map_; }

 private:
  std::map<Key, Payload> map_;
};

std::vector<OpResult> oracle_apply(std::span<const Op> ops);

/// Runs `op` against any index and reports the result in oracle form.
OpResult apply_to_index(OrderedIndex& index, const Op& op);

}  // namespace lidx
