#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "lidx/core/types.hpp"
#include "lidx/pla/pla.hpp"
#include "lidx/sync/versioned_lock.hpp"

namespace lidx::gapped::detail {

inline constexpr std::size_t kNone = ~std::size_t{0};

template <typename T>
T load_relaxed(const T& ref) noexcept {
  return std::atomic_ref<T>(const_cast<T&>(ref)).load(std::memory_order_relaxed);
}

template <typename T>
void store_relaxed(T& ref, T value) noexcept {
  std::atomic_ref<T>(ref).store(value, std::memory_order_relaxed);
}

struct Node {
  explicit Node(bool leaf) : is_leaf(leaf) {}
  const bool is_leaf;
};

/// Routes keys to children with an integer linear function over
/// [model_lo, model_lo + model_width): slot = (key − model_lo) · fanout / width,
/// clamped to the slot range. Keys outside the model range but inside
/// [range_lo, range_hi] go to the first or last slot.
struct InnerNode : Node {
  InnerNode(Key lo, Key hi, Key mlo, Key mhi, std::size_t fanout);

  std::size_t route(Key key) const noexcept {
    if (key <= model_lo) {
      return 0;
    }
    const auto off = static_cast<unsigned __int128>(key - model_lo);
    const auto slot = static_cast<std::size_t>(off * fanout / model_width);
    return slot < fanout ? slot : fanout - 1;
  }

  /// Smallest and largest key routed to slot i.
  Key slot_lo(std::size_t i) const noexcept;
  Key slot_hi(std::size_t i) const noexcept;

  Node* child(std::size_t i) const noexcept { return children[i].load(std::memory_order_acquire); }
  std::size_t bytes() const noexcept { return sizeof(InnerNode) + fanout * sizeof(std::atomic<Node*>); }

  const Key range_lo;
  const Key range_hi;
  const Key model_lo;
  const unsigned __int128 model_width;
  const std::size_t fanout;
  std::unique_ptr<std::atomic<Node*>[]> children;
  std::shared_mutex mutex;  // held exclusively while child pointers change
};

/// Gapped array of (key, payload) slots with an occupancy bitmap.
///
/// A gap holds a copy of the next occupied key to its right (or the largest
/// key value at the tail), so the key array is non-decreasing and can be
/// searched without the bitmap. All slot reads and writes are relaxed atomic
/// accesses: writers hold `lock`, readers validate its version afterwards and
/// must tolerate torn intermediate states.
struct DataNode : Node {
  explicit DataNode(std::size_t capacity);

  /// Places sorted pairs at model-predicted slots.
  static std::unique_ptr<DataNode> build(std::span<const KeyValue> pairs, std::size_t capacity);

  Key key_at(std::size_t i) const noexcept { return load_relaxed(keys[i]); }
  Payload payload_at(std::size_t i) const noexcept { return load_relaxed(payloads[i]); }
  bool occupied(std::size_t i) const noexcept { return (load_relaxed(bitmap[i / 64]) >> (i % 64)) & 1; }

  std::size_t predict(Key key) const noexcept;
  /// First slot whose key is >= `key`, or capacity.
  std::size_t lower_bound(Key key) const noexcept;
  /// First occupied slot >= from, or capacity.
  std::size_t next_occupied(std::size_t from) const noexcept;

  std::optional<Payload> find(Key key) const noexcept;

  struct InsertOutcome {
    bool inserted;
    std::size_t shifted;
  };
  /// Requires `lock` held and at least one gap.
  InsertOutcome insert(Key key, Payload payload) noexcept;
  /// Requires `lock` held.
  bool erase(Key key) noexcept;

  void collect(std::vector<KeyValue>& out) const;
  /// Appends up to `limit` occupied pairs with key >= start. Safe to call
  /// without the lock; the caller validates afterwards.
  void collect_from(Key start, std::size_t limit, std::vector<KeyValue>& out) const;

  std::size_t bytes() const noexcept {
    return sizeof(DataNode) + capacity * (sizeof(Key) + sizeof(Payload)) + words() * sizeof(std::uint64_t);
  }
  std::size_t words() const noexcept { return (capacity + 63) / 64; }
  double density() const noexcept { return static_cast<double>(num_keys) / static_cast<double>(capacity); }

  pla::LinearModel model;
  const std::size_t capacity;
  std::unique_ptr<Key[]> keys;
  std::unique_ptr<Payload[]> payloads;
  std::unique_ptr<std::uint64_t[]> bitmap;
  std::size_t num_keys = 0;

  sync::VersionedLock lock;
  std::atomic<bool> obsolete{false};
  std::atomic<DataNode*> next_leaf{nullptr};

  InnerNode* parent = nullptr;
  std::size_t slot_begin = 0;
  std::size_t slot_end = 0;
  Key kmin = 0;
  Key kmax = 0;

  std::uint64_t shifts_since_smo = 0;
  std::uint64_t inserts_since_smo = 0;
  bool from_smo = false;

 private:
  void set_key(std::size_t i, Key k) noexcept { store_relaxed(keys[i], k); }
  void set_payload(std::size_t i, Payload p) noexcept { store_relaxed(payloads[i], p); }
  void set_bit(std::size_t i, bool on) noexcept;
  std::size_t next_gap(std::size_t from) const noexcept;
  std::size_t prev_gap(std::size_t before) const noexcept;
};

}  // namespace lidx::gapped::detail
