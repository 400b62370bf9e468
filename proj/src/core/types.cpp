#include "lidx/core/types.hpp"

#include <algorithm>

namespace lidx {

bool is_strictly_increasing(std::span<const Key> keys) noexcept {
  return std::adjacent_find(keys.begin(), keys.end(),
                            [](Key a, Key b) { return a >= b; }) == keys.end();
}

Dataset Dataset::from_sorted_unique(std::vector<Key> keys) {
  if (!is_strictly_increasing(keys)) {
    throw DatasetError("keys are not strictly increasing");
  }
  return Dataset(std::move(keys));
}

Dataset Dataset::from_unsorted(std::vector<Key> keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return Dataset(std::move(keys));
}

std::vector<CdfPoint> Dataset::cdf_points() const {
  std::vector<CdfPoint> points(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    points[i] = {keys_[i], i};
  }
  return points;
}

std::vector<KeyValue> Dataset::with_payloads() const {
  std::vector<KeyValue> pairs(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    pairs[i] = {keys_[i], keys_[i]};
  }
  return pairs;
}

}  // namespace lidx
