#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <limits>

#include "nodes.hpp"

namespace lidx::gapped::detail {

namespace {

constexpr Key kKeyMax = std::numeric_limits<Key>::max();

unsigned __int128 ceil_div(unsigned __int128 a, unsigned __int128 b) { return (a + b - 1) / b; }

}  // namespace

InnerNode::InnerNode(Key lo, Key hi, Key mlo, Key mhi, std::size_t f)
    : Node(false),
      range_lo(lo),
      range_hi(hi),
      model_lo(mlo),
      model_width(static_cast<unsigned __int128>(mhi - mlo) + 1),
      fanout(f),
      children(std::make_unique<std::atomic<Node*>[]>(f)) {
  assert(f >= 1 && std::has_single_bit(f));
  for (std::size_t i = 0; i < f; ++i) {
    children[i].store(nullptr, std::memory_order_relaxed);
  }
}

Key InnerNode::slot_lo(std::size_t i) const noexcept {
  if (i == 0) {
    return range_lo;
  }
  return model_lo + static_cast<Key>(ceil_div(static_cast<unsigned __int128>(i) * model_width, fanout));
}

Key InnerNode::slot_hi(std::size_t i) const noexcept {
  if (i + 1 == fanout) {
    return range_hi;
  }
  return model_lo +
         static_cast<Key>(ceil_div(static_cast<unsigned __int128>(i + 1) * model_width, fanout)) - 1;
}

DataNode::DataNode(std::size_t cap)
    : Node(true),
      capacity(cap),
      keys(std::make_unique<Key[]>(cap)),
      payloads(std::make_unique<Payload[]>(cap)),
      bitmap(std::make_unique<std::uint64_t[]>((cap + 63) / 64)) {
  std::fill_n(keys.get(), cap, kKeyMax);
}

std::unique_ptr<DataNode> DataNode::build(std::span<const KeyValue> pairs, std::size_t cap) {
  const std::size_t n = pairs.size();
  assert(n < cap);
  auto node = std::make_unique<DataNode>(cap);
  if (n == 0) {
    return node;
  }

  std::vector<Key> ks(n);
  for (std::size_t i = 0; i < n; ++i) {
    ks[i] = pairs[i].key;
  }
  node->model = pla::fit_least_squares(ks);
  const double scale = static_cast<double>(cap) / static_cast<double>(n);
  node->model.slope *= scale;
  node->model.intercept *= scale;

  std::size_t next_free = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos = std::max(node->predict(ks[i]), next_free);
    pos = std::min(pos, cap - (n - i));
    node->keys[pos] = pairs[i].key;
    node->payloads[pos] = pairs[i].payload;
    node->bitmap[pos / 64] |= std::uint64_t{1} << (pos % 64);
    next_free = pos + 1;
    last = pos;
  }
  // Gaps take the next occupied key; the tail keeps kKeyMax.
  Key fill = kKeyMax;
  for (std::size_t i = last + 1; i-- > 0;) {
    if (node->occupied(i)) {
      fill = node->keys[i];
    } else {
      node->keys[i] = fill;
    }
  }
  node->num_keys = n;
  return node;
}

std::size_t DataNode::predict(Key key) const noexcept {
  const double p = model.predict(key);
  if (!(p > 0.0)) {
    return 0;
  }
  const double last = static_cast<double>(capacity - 1);
  return p >= last ? capacity - 1 : static_cast<std::size_t>(std::llround(p));
}

std::size_t DataNode::lower_bound(Key key) const noexcept {
  const std::size_t pos = predict(key);
  std::size_t lo;
  std::size_t hi;
  if (key_at(pos) >= key) {
    hi = pos;
    std::size_t step = 1;
    while (hi >= step && key_at(hi - step) >= key) {
      hi -= step;
      step *= 2;
    }
    lo = hi >= step ? hi - step + 1 : 0;
  } else {
    lo = pos + 1;
    std::size_t step = 1;
    for (;;) {
      const std::size_t probe = lo + step - 1;
      if (probe >= capacity) {
        hi = capacity;
        break;
      }
      if (key_at(probe) >= key) {
        hi = probe;
        break;
      }
      lo = probe + 1;
      step *= 2;
    }
  }
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (key_at(mid) >= key) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::size_t DataNode::next_occupied(std::size_t from) const noexcept {
  if (from >= capacity) {
    return capacity;
  }
  std::size_t w = from / 64;
  std::uint64_t bits = load_relaxed(bitmap[w]) & (~std::uint64_t{0} << (from % 64));
  const std::size_t nw = words();
  while (bits == 0) {
    if (++w == nw) {
      return capacity;
    }
    bits = load_relaxed(bitmap[w]);
  }
  return std::min(capacity, w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
}

std::size_t DataNode::next_gap(std::size_t from) const noexcept {
  if (from >= capacity) {
    return kNone;
  }
  std::size_t w = from / 64;
  std::uint64_t free = ~load_relaxed(bitmap[w]) & (~std::uint64_t{0} << (from % 64));
  const std::size_t nw = words();
  while (free == 0) {
    if (++w == nw) {
      return kNone;
    }
    free = ~load_relaxed(bitmap[w]);
  }
  const std::size_t i = w * 64 + static_cast<std::size_t>(std::countr_zero(free));
  return i < capacity ? i : kNone;
}

std::size_t DataNode::prev_gap(std::size_t before) const noexcept {
  if (before == 0) {
    return kNone;
  }
  const std::size_t last = before - 1;
  std::size_t w = last / 64;
  const unsigned shift = 63 - static_cast<unsigned>(last % 64);
  std::uint64_t free = (~load_relaxed(bitmap[w]) << shift) >> shift;
  while (free == 0) {
    if (w == 0) {
      return kNone;
    }
    free = ~load_relaxed(bitmap[--w]);
  }
  return w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(free));
}

void DataNode::set_bit(std::size_t i, bool on) noexcept {
  std::uint64_t& word = bitmap[i / 64];
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  store_relaxed(word, on ? (load_relaxed(word) | mask) : (load_relaxed(word) & ~mask));
}

std::optional<Payload> DataNode::find(Key key) const noexcept {
  const std::size_t q = next_occupied(lower_bound(key));
  if (q < capacity && key_at(q) == key) {
    return payload_at(q);
  }
  return std::nullopt;
}

DataNode::InsertOutcome DataNode::insert(Key key, Payload payload) noexcept {
  const std::size_t p = lower_bound(key);
  const std::size_t q = next_occupied(p);
  if (q < capacity && key_at(q) == key) {
    set_payload(q, payload);
    return {false, 0};
  }

  // [p, q) is the whole gap run in front of q: a gap before p would hold
  // key_at(q) >= key and so would have been found by lower_bound.
  if (p < q) {
    const std::size_t g = std::clamp(predict(key), p, q - 1);
    set_payload(g, payload);
    set_key(g, key);
    set_bit(g, true);
    for (std::size_t i = p; i < g; ++i) {
      set_key(i, key);
    }
    ++num_keys;
    return {true, 0};
  }

  // p is occupied by a larger key, or p == capacity. Move a run of keys one
  // slot toward the nearest gap.
  const std::size_t r = next_gap(p);
  const std::size_t l = prev_gap(p);
  assert(r != kNone || l != kNone);
  const std::size_t right_cost = r == kNone ? kNone : r - p;
  const std::size_t left_cost = l == kNone ? kNone : p - 1 - l;

  std::size_t shifted;
  if (right_cost <= left_cost) {
    for (std::size_t i = r; i > p; --i) {
      set_key(i, key_at(i - 1));
      set_payload(i, payload_at(i - 1));
    }
    set_bit(r, true);
    set_payload(p, payload);
    set_key(p, key);
    shifted = right_cost;
  } else {
    // Slot l is a gap holding key_at(l + 1), which is what l receives, so
    // the gaps in front of l stay valid.
    for (std::size_t i = l; i + 1 < p; ++i) {
      set_key(i, key_at(i + 1));
      set_payload(i, payload_at(i + 1));
    }
    set_bit(l, true);
    set_payload(p - 1, payload);
    set_key(p - 1, key);
    shifted = left_cost;
  }
  ++num_keys;
  return {true, shifted};
}

bool DataNode::erase(Key key) noexcept {
  const std::size_t q = next_occupied(lower_bound(key));
  if (q >= capacity || key_at(q) != key) {
    return false;
  }
  set_bit(q, false);
  const Key fill = q + 1 < capacity ? key_at(q + 1) : kKeyMax;
  set_key(q, fill);
  for (std::size_t i = q; i-- > 0 && !occupied(i);) {
    set_key(i, fill);
  }
  --num_keys;
  return true;
}

void DataNode::collect(std::vector<KeyValue>& out) const {
  for (std::size_t i = next_occupied(0); i < capacity; i = next_occupied(i + 1)) {
    out.push_back({key_at(i), payload_at(i)});
  }
}

void DataNode::collect_from(Key start, std::size_t limit, std::vector<KeyValue>& out) const {
  std::size_t taken = 0;
  for (std::size_t i = next_occupied(lower_bound(start)); i < capacity && taken < limit;
       i = next_occupied(i + 1)) {
    const Key k = key_at(i);
    if (k >= start) {
      out.push_back({k, payload_at(i)});
      ++taken;
    }
  }
}

}  // namespace lidx::gapped::detail
