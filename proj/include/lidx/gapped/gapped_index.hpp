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

namespace lidx::gapped {

namespace detail {
struct Node;
struct InnerNode;
struct DataNode;
}  // namespace detail

struct GappedConfig {
  double min_density = 0.6;
  double avg_density = 0.7;
  double max_density = 0.8;

  /// Data nodes never grow past this many bytes of key and payload slots.
  std::size_t max_data_node_bytes = 512 * 1024;
  std::size_t max_fanout = std::size_t{1} << 14;

  /// Split instead of expanding once inserts since the last SMO have shifted
  /// more than this many keys on average.
  double shift_threshold = 32.0;

  /// Failed optimistic lock upgrades before a writer blocks on the lock.
  std::size_t optimistic_retries = 64;

  /// Rebuild a data node at avg density when a remove takes it below
  /// min density.
  bool contract_on_remove = false;

  /// Bulk load groups routing slots into one data node while their keys stay
  /// within ±ε of a single line, with ε = this fraction of the node's key cap.
  double bulk_epsilon_fraction = 0.02;

  /// Densities scaled so that avg_density == fill factor, e.g. 0.25 for the
  /// memory-hungry configuration.
  static GappedConfig with_fill_factor(double fill);

  std::size_t max_slots() const noexcept { return max_data_node_bytes / (sizeof(Key) + sizeof(Payload)); }
  void validate() const;
};

/// Updatable learned index with gapped-array data nodes.
///
/// Inner nodes route by a linear function of the key; there is no search in
/// the inner levels. Data nodes keep keys at model-predicted slots with gaps
/// left for inserts and use exponential search around the prediction.
/// Readers never lock: they validate a per-data-node version. Writers lock a
/// single data node. Expansions and splits build new nodes and swap them into
/// the parent under the parent's exclusive lock; old nodes are reclaimed by
/// epochs.
class GappedIndex final : public OrderedIndex {
 public:
  explicit GappedIndex(GappedConfig config = {});
  ~GappedIndex() override;

  GappedIndex(const GappedIndex&) = delete;
  GappedIndex& operator=(const GappedIndex&) = delete;

  void bulk_load(std::span<const KeyValue> pairs) override;
  std::optional<Payload> lookup(Key key) const override;
  bool insert(Key key, Payload payload) override;
  bool remove(Key key) override;
  std::size_t range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const override;
  using OrderedIndex::range_scan;
  std::size_t size_in_bytes() const override;
  Counters op_stats() const override { return counters_.snapshot(); }
  std::string_view name() const override { return "gapped"; }

  const GappedConfig& config() const noexcept { return config_; }

  struct DataNodeInfo {
    std::size_t capacity = 0;
    std::size_t num_keys = 0;
    std::size_t depth = 0;  // inner nodes above the data node
    bool from_smo = false;

    double density() const { return capacity == 0 ? 0.0 : static_cast<double>(num_keys) / static_cast<double>(capacity); }
  };

  // The following walk the whole tree and need a quiescent index.

  std::vector<DataNodeInfo> data_nodes() const;
  std::size_t num_keys() const;
  /// Throws std::logic_error describing the first broken structural invariant.
  void check_invariants() const;

 private:
  detail::InnerNode* build_inner(std::span<const KeyValue> pairs, Key range_lo, Key range_hi,
                                 std::size_t max_node_keys, bool from_smo,
                                 std::vector<detail::DataNode*>& leaves);
  detail::DataNode* make_leaf(std::span<const KeyValue> pairs, double density, bool from_smo);
  std::size_t capacity_for(std::size_t n, double target_density) const;
  std::size_t max_node_keys() const;

  detail::DataNode* find_leaf(Key key, std::size_t* inner_visited) const;
  detail::DataNode* lock_leaf(Key key, std::size_t* inner_visited);
  void structure_modification(detail::DataNode* node, bool contract);
  void link_predecessor(detail::DataNode* old_node, detail::DataNode* first_new);
  void retire(detail::DataNode* node);
  void destroy();

  GappedConfig config_;
  detail::InnerNode* root_ = nullptr;
  mutable sync::EpochManager epochs_;
  mutable StripedCounters counters_;
  std::atomic<std::size_t> bytes_{0};
};

}  // namespace lidx::gapped
