#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lidx {

using Key = std::uint64_t;
using Payload = std::uint64_t;

struct KeyValue {
  Key key = 0;
  Payload payload = 0;

  friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

/// A point of the key CDF: key and its 0-based rank in the dataset.
struct CdfPoint {
  Key key = 0;
  std::uint64_t rank = 0;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strictly increasing sequence of keys. The invariant is established at
/// construction and cannot be broken afterwards.
class Dataset {
 public:
  Dataset() = default;

  /// Takes ownership of `keys`, which must already be strictly increasing.
  /// Throws DatasetError otherwise.
  static Dataset from_sorted_unique(std::vector<Key> keys);

  /// Sorts and deduplicates arbitrary keys.
  static Dataset from_unsorted(std::vector<Key> keys);

  std::span<const Key> keys() const noexcept { return keys_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  Key operator[](std::size_t i) const noexcept { return keys_[i]; }
  Key front() const { return keys_.front(); }
  Key back() const { return keys_.back(); }

  std::vector<CdfPoint> cdf_points() const;

  /// Pairs every key with a payload. By convention the payload is the key.
  std::vector<KeyValue> with_payloads() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  explicit Dataset(std::vector<Key> keys) : keys_(std::move(keys)) {}
  std::vector<Key> keys_;
};

bool is_strictly_increasing(std::span<const Key> keys) noexcept;

}  // namespace lidx
