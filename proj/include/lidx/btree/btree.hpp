#pragma once

#include <cstddef>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string_view>
#include <vector>

#include "lidx/core/counters.hpp"
#include "lidx/core/ordered_index.hpp"

namespace lidx::btree {

/// Textbook B+-tree with side-linked leaves, used as the traditional
/// baseline and as a second reference implementation.
///
/// Nodes hold up to kFanout keys (leaves) or children (inner nodes) and at
/// least half of that except at the root. One reader-writer lock guards the
/// whole tree, so it is thread-safe but does not scale with writers.
class BTree final : public OrderedIndex {
 public:
  static constexpr std::size_t kFanout = 64;

  BTree();
  ~BTree() override;

  BTree(const BTree&) = delete;
  BTree& operator=(const BTree&) = delete;

  void bulk_load(std::span<const KeyValue> pairs) override;
  std::optional<Payload> lookup(Key key) const override;
  bool insert(Key key, Payload payload) override;
  bool remove(Key key) override;
  std::size_t range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const override;
  using OrderedIndex::range_scan;
  std::size_t size_in_bytes() const override;
  Counters op_stats() const override { return counters_.snapshot(); }
  std::string_view name() const override { return "btree"; }

  std::size_t height() const;
  std::size_t num_keys() const;
  /// Throws std::logic_error describing the first broken invariant.
  void validate() const;

  struct Node;
  struct Leaf;
  struct Inner;

 private:
  struct Split;

  Split insert_into(Node* node, Key key, Payload payload, bool& inserted);
  bool remove_from(Node* node, Key key);
  void rebalance(Inner* parent, std::size_t child_index);
  const Leaf* find_leaf(Key key, std::size_t* visited) const;
  void clear();

  mutable std::shared_mutex mutex_;
  Node* root_ = nullptr;
  std::size_t leaves_ = 0;
  std::size_t inners_ = 0;
  mutable StripedCounters counters_;
};

}  // namespace lidx::btree
