#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lidx/core/counters.hpp"
#include "lidx/core/types.hpp"

namespace lidx {

/// Behavioral contract shared by every index in the library.
///
/// Keys are unique. insert() on a present key overwrites its payload and
/// returns false. All operations of the concurrent implementations may be
/// called from any number of threads; bulk_load() may not run concurrently
/// with anything else.
class OrderedIndex {
 public:
  virtual ~OrderedIndex() = default;

  /// Replaces the contents with `pairs`, which must be non-empty and strictly
  /// increasing by key. Throws std::invalid_argument otherwise.
  virtual void bulk_load(std::span<const KeyValue> pairs) = 0;

  virtual std::optional<Payload> lookup(Key key) const = 0;
  virtual bool insert(Key key, Payload payload) = 0;
  virtual bool remove(Key key) = 0;

  /// Fills `out` with the `count` smallest pairs whose key is >= `start`, in
  /// ascending order. Returns the number of pairs written.
  virtual std::size_t range_scan(Key start, std::size_t count,
                                 std::vector<KeyValue>& out) const = 0;

  /// End-to-end footprint: every node, array, bitmap and header.
  virtual std::size_t size_in_bytes() const = 0;
  virtual Counters op_stats() const = 0;
  virtual std::string_view name() const = 0;

  std::vector<KeyValue> range_scan(Key start, std::size_t count) const {
    std::vector<KeyValue> out;
    range_scan(start, count, out);
    return out;
  }
};

/// Throws std::invalid_argument unless `pairs` is non-empty and strictly
/// increasing by key.
void require_bulk_input(std::span<const KeyValue> pairs);

}  // namespace lidx
