#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lidx/core/counters.hpp"
#include "lidx/core/ordered_index.hpp"
#include "lidx/sync/epoch.hpp"
#include "lidx/sync/versioned_lock.hpp"

namespace lidx::chain {

struct ChainConfig {
  /// Keys per entry when a node is built.
  double density = 0.5;
  std::size_t max_node_bytes = std::size_t{16} << 20;

  /// A subtree is rebuilt once its root has seen at least
  /// rebuild_insert_factor × build_size inserts and at least
  /// rebuild_conflict_ratio of them collided in that node.
  double rebuild_insert_factor = 2.0;
  double rebuild_conflict_ratio = 0.1;

  std::size_t optimistic_retries = 64;

  std::size_t max_entries() const;
  void validate() const;
};

namespace detail {

struct ChainNode;

enum EntryKind : std::uint64_t { kEmpty = 0, kData = 1, kChild = 2 };

/// One slot of a node. `value` is the payload of a data entry or the
/// ChainNode* of a child entry. Readers load all three words and accept
/// them only if the lock version did not move.
struct Entry {
  sync::VersionedLock lock;
  std::atomic<std::uint64_t> kind{kEmpty};
  std::atomic<Key> key{0};
  std::atomic<std::uint64_t> value{0};
};
static_assert(sizeof(Entry) == 32);

}  // namespace detail

/// Updatable learned index that resolves every model collision with a child
/// node instead of searching.
///
/// Each node maps a key to exactly one entry. An entry is empty, holds one
/// key, or points to a child node holding every key that maps there. An
/// insert that hits an occupied entry allocates a single two-key child.
/// Every node on an insert path counts inserts, and the node where a
/// collision happened also counts conflicts; a node whose counts cross the
/// configured thresholds has its subtree rebuilt by the inserting thread.
class ChainIndex final : public OrderedIndex {
 public:
  explicit ChainIndex(ChainConfig config = {});
  ~ChainIndex() override;

  ChainIndex(const ChainIndex&) = delete;
  ChainIndex& operator=(const ChainIndex&) = delete;

  void bulk_load(std::span<const KeyValue> pairs) override;
  std::optional<Payload> lookup(Key key) const override;
  bool insert(Key key, Payload payload) override;
  bool remove(Key key) override;
  std::size_t range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const override;
  using OrderedIndex::range_scan;
  std::size_t size_in_bytes() const override { return bytes_.load(std::memory_order_relaxed); }
  Counters op_stats() const override { return counters_.snapshot(); }
  std::string_view name() const override { return "chain"; }

  const ChainConfig& config() const noexcept { return config_; }

  struct NodeInfo {
    std::size_t length = 0;
    std::size_t depth = 0;  // 0 for the root
    std::size_t data_entries = 0;
    std::size_t child_entries = 0;
    std::uint64_t build_size = 0;
    std::uint64_t inserts = 0;
    std::uint64_t conflicts = 0;
  };

  // The following need a quiescent index.

  std::vector<NodeInfo> nodes() const;
  std::size_t num_keys() const;
  /// Throws std::logic_error describing the first broken structural invariant.
  void check_invariants() const;

 private:
  struct PathStep {
    detail::Entry* parent_entry;
    detail::ChainNode* parent_node;  // owner of parent_entry, null for the root entry
    detail::ChainNode* node;
  };

  enum class WriteKind { kInsert, kRemove };
  bool write(Key key, Payload payload, WriteKind kind);

  /// Builds a subtree and adds the number of nodes it allocated to `built`.
  detail::ChainNode* build(std::span<const KeyValue> pairs, std::size_t& built);
  void maybe_rebuild(const std::vector<PathStep>& path);
  void rebuild(const PathStep& step);
  void retire(detail::ChainNode* node);
  void destroy(detail::ChainNode* node);
  detail::ChainNode* root() const;

  ChainConfig config_;
  detail::Entry root_entry_;
  mutable sync::EpochManager epochs_;
  mutable StripedCounters counters_;
  std::atomic<std::size_t> bytes_{0};
};

}  // namespace lidx::chain
