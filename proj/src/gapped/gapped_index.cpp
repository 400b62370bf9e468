#include "lidx/gapped/gapped_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>

#include "lidx/pla/pla.hpp"
#include "lidx/sync/backoff.hpp"
#include "nodes.hpp"

namespace lidx::gapped {

using detail::DataNode;
using detail::InnerNode;
using detail::Node;

namespace {

constexpr Key kKeyMax = std::numeric_limits<Key>::max();

std::size_t floor_pow2(unsigned __int128 v) {
  std::size_t p = 1;
  while (p <= (std::size_t{1} << 62) && static_cast<unsigned __int128>(p) * 2 <= v) {
    p *= 2;
  }
  return p;
}

void fail(const std::string& what) { throw std::logic_error("gapped index: " + what); }

}  // namespace

GappedConfig GappedConfig::with_fill_factor(double fill) {
  GappedConfig c;
  c.avg_density = fill;
  c.min_density = fill * 6.0 / 7.0;
  c.max_density = fill * 8.0 / 7.0;
  return c;
}

void GappedConfig::validate() const {
  if (!(min_density > 0.0 && min_density <= avg_density && avg_density <= max_density &&
        max_density < 1.0)) {
    throw std::invalid_argument("densities must satisfy 0 < min <= avg <= max < 1");
  }
  if (max_slots() < 64) {
    throw std::invalid_argument("max_data_node_bytes too small");
  }
  if (max_fanout < 2 || !std::has_single_bit(max_fanout)) {
    throw std::invalid_argument("max_fanout must be a power of two >= 2");
  }
  if (!(bulk_epsilon_fraction > 0.0)) {
    throw std::invalid_argument("bulk_epsilon_fraction must be positive");
  }
}

GappedIndex::GappedIndex(GappedConfig config) : config_(config) {
  config_.validate();
  root_ = new InnerNode(0, kKeyMax, 0, kKeyMax, 1);
  bytes_ += root_->bytes();
  DataNode* leaf = make_leaf({}, config_.avg_density, false);
  leaf->parent = root_;
  leaf->slot_begin = 0;
  leaf->slot_end = 1;
  leaf->kmin = 0;
  leaf->kmax = kKeyMax;
  root_->children[0].store(leaf, std::memory_order_release);
}

GappedIndex::~GappedIndex() { destroy(); }

void GappedIndex::destroy() {
  if (root_ == nullptr) {
    return;
  }
  std::vector<Node*> stack{root_};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf) {
      delete static_cast<DataNode*>(n);
      continue;
    }
    auto* inner = static_cast<InnerNode*>(n);
    Node* prev = nullptr;
    for (std::size_t i = 0; i < inner->fanout; ++i) {
      Node* c = inner->child(i);
      if (c != prev && c != nullptr) {
        stack.push_back(c);
      }
      prev = c;
    }
    delete inner;
  }
  root_ = nullptr;
  bytes_ = 0;
}

std::size_t GappedIndex::max_node_keys() const {
  return std::max<std::size_t>(
      2, static_cast<std::size_t>(static_cast<double>(config_.max_slots()) * config_.avg_density));
}

std::size_t GappedIndex::capacity_for(std::size_t n, double target) const {
  const double nd = static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::ceil(nd / config_.max_density));
  const auto hi = std::max(lo, static_cast<std::size_t>(std::floor(nd / config_.min_density)));
  std::size_t cap = std::clamp(static_cast<std::size_t>(std::llround(nd / target)), lo, hi);
  cap = std::max(cap, n + 1);
  return std::min(cap, std::max(config_.max_slots(), n + 1));
}

DataNode* GappedIndex::make_leaf(std::span<const KeyValue> pairs, double density, bool from_smo) {
  DataNode* leaf = DataNode::build(pairs, capacity_for(pairs.size(), density)).release();
  leaf->from_smo = from_smo;
  bytes_ += leaf->bytes();
  return leaf;
}

InnerNode* GappedIndex::build_inner(std::span<const KeyValue> pairs, Key range_lo, Key range_hi,
                                    std::size_t max_keys, bool from_smo,
                                    std::vector<DataNode*>& leaves) {
  const std::size_t n = pairs.size();
  const Key mlo = pairs.front().key;
  const Key mhi = pairs.back().key;
  const unsigned __int128 width = static_cast<unsigned __int128>(mhi - mlo) + 1;

  std::size_t fanout = std::bit_ceil((4 * n + max_keys - 1) / max_keys);
  fanout = std::clamp<std::size_t>(fanout, 2, config_.max_fanout);
  fanout = std::min(fanout, floor_pow2(width));

  auto* inner = new InnerNode(range_lo, range_hi, mlo, mhi, fanout);
  bytes_ += inner->bytes();

  // first[s] = index of the first pair routed to slot s or later.
  std::vector<std::size_t> first(fanout + 1, n);
  {
    std::size_t i = 0;
    for (std::size_t s = 0; s < fanout; ++s) {
      first[s] = i;
      while (i < n && inner->route(pairs[i].key) == s) {
        ++i;
      }
    }
    first[fanout] = n;
  }
  auto count = [&](std::size_t s) { return first[s + 1] - first[s]; };
  std::size_t last_nonempty = 0;
  for (std::size_t s = 0; s < fanout; ++s) {
    if (count(s) > 0) {
      last_nonempty = s;
    }
  }

  const auto eps = static_cast<std::uint64_t>(
      std::max(1.0, config_.bulk_epsilon_fraction * static_cast<double>(max_keys)));

  auto install = [&](Node* child, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      inner->children[s].store(child, std::memory_order_relaxed);
    }
  };

  std::size_t s = 0;
  while (s < fanout) {
    const std::size_t group_begin = s;  // empty slots in front join this child
    while (count(s) == 0) {
      ++s;
    }
    if (count(s) > max_keys) {
      const std::size_t end = s >= last_nonempty ? fanout : s + 1;
      InnerNode* child = build_inner(pairs.subspan(first[s], count(s)), inner->slot_lo(group_begin),
                                     inner->slot_hi(end - 1), max_keys, from_smo, leaves);
      install(child, group_begin, end);
      s = end;
      continue;
    }

    std::size_t total = count(s);
    pla::StreamingFitter fitter(eps);
    bool fits = true;
    for (std::size_t i = first[s]; i < first[s + 1] && fits; ++i) {
      fits = fitter.add(pairs[i].key, i - first[s]);
    }
    std::size_t end = s + 1;
    while (fits && end <= last_nonempty) {
      std::size_t next = end;
      while (count(next) == 0) {
        ++next;
      }
      if (count(next) > max_keys || total + count(next) > max_keys) {
        break;
      }
      pla::StreamingFitter trial = fitter;
      for (std::size_t i = first[next]; i < first[next + 1] && fits; ++i) {
        fits = trial.add(pairs[i].key, i - first[s]);
      }
      if (!fits) {
        break;
      }
      fitter = std::move(trial);
      total += count(next);
      end = next + 1;
    }
    // A lone key cannot reach min density, so it joins its neighbor.
    if (total < 2 && end <= last_nonempty) {
      std::size_t next = end;
      while (count(next) == 0) {
        ++next;
      }
      if (count(next) <= max_keys) {
        total += count(next);
        end = next + 1;
      }
    }
    if (end <= last_nonempty && n - (first[s] + total) == 1) {
      ++total;
      end = last_nonempty + 1;
    }
    if (end > last_nonempty) {
      end = fanout;
    }

    DataNode* leaf = make_leaf(pairs.subspan(first[s], total), config_.avg_density, from_smo);
    leaf->parent = inner;
    leaf->slot_begin = group_begin;
    leaf->slot_end = end;
    leaf->kmin = inner->slot_lo(group_begin);
    leaf->kmax = inner->slot_hi(end - 1);
    install(leaf, group_begin, end);
    leaves.push_back(leaf);
    s = end;
  }
  return inner;
}

void GappedIndex::bulk_load(std::span<const KeyValue> pairs) {
  require_bulk_input(pairs);
  destroy();
  std::vector<DataNode*> leaves;
  root_ = build_inner(pairs, 0, kKeyMax, max_node_keys(), false, leaves);
  for (std::size_t i = 0; i + 1 < leaves.size(); ++i) {
    leaves[i]->next_leaf.store(leaves[i + 1], std::memory_order_relaxed);
  }
  std::atomic_thread_fence(std::memory_order_release);
}

DataNode* GappedIndex::find_leaf(Key key, std::size_t* inner_visited) const {
  Node* n = root_;
  std::size_t visited = 0;
  while (!n->is_leaf) {
    const auto* inner = static_cast<const InnerNode*>(n);
    n = inner->child(inner->route(key));
    ++visited;
  }
  if (inner_visited != nullptr) {
    *inner_visited = visited;
  }
  return static_cast<DataNode*>(n);
}

DataNode* GappedIndex::lock_leaf(Key key, std::size_t* inner_visited) {
  std::size_t attempts = 0;
  sync::Backoff backoff;
  for (;;) {
    DataNode* leaf = find_leaf(key, inner_visited);
    if (attempts < config_.optimistic_retries) {
      ++attempts;
      const auto v = leaf->lock.read_begin();
      if (v && !leaf->obsolete.load(std::memory_order_acquire) && leaf->lock.try_upgrade(*v)) {
        return leaf;
      }
      backoff.wait();
      continue;
    }
    leaf->lock.lock();
    if (!leaf->obsolete.load(std::memory_order_acquire)) {
      return leaf;
    }
    leaf->lock.unlock();
  }
}

std::optional<Payload> GappedIndex::lookup(Key key) const {
  sync::EpochGuard guard(epochs_);
  counters_.add(Counter::kLookups);
  sync::Backoff backoff;
  for (;;) {
    std::size_t visited = 0;
    const DataNode* leaf = find_leaf(key, &visited);
    const auto v = leaf->lock.read_begin();
    if (!v || leaf->obsolete.load(std::memory_order_acquire)) {
      backoff.wait();
      continue;
    }
    const std::optional<Payload> result = leaf->find(key);
    if (leaf->lock.validate(*v)) {
      counters_.add(Counter::kNodesTraversed, visited);
      return result;
    }
  }
}

bool GappedIndex::insert(Key key, Payload payload) {
  sync::EpochGuard guard(epochs_);
  std::size_t visited = 0;
  DataNode* leaf = lock_leaf(key, &visited);
  counters_.add(Counter::kNodesTraversed, visited);
  const DataNode::InsertOutcome out = leaf->insert(key, payload);
  if (!out.inserted) {
    leaf->lock.unlock();
    counters_.add(Counter::kUpdates);
    return false;
  }
  counters_.add(Counter::kInserts);
  counters_.add(Counter::kKeysShifted, out.shifted);
  ++leaf->inserts_since_smo;
  leaf->shifts_since_smo += out.shifted;
  if (leaf->density() > config_.max_density) {
    structure_modification(leaf, false);
  } else {
    leaf->lock.unlock();
  }
  return true;
}

bool GappedIndex::remove(Key key) {
  sync::EpochGuard guard(epochs_);
  DataNode* leaf = lock_leaf(key, nullptr);
  const bool erased = leaf->erase(key);
  if (erased) {
    counters_.add(Counter::kRemoves);
  }
  if (erased && config_.contract_on_remove && leaf->density() < config_.min_density) {
    structure_modification(leaf, true);
  } else {
    leaf->lock.unlock();
  }
  return erased;
}

std::size_t GappedIndex::range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const {
  out.clear();
  counters_.add(Counter::kScans);
  if (count == 0) {
    return 0;
  }
  sync::EpochGuard guard(epochs_);
  sync::Backoff backoff;
  Key cursor = start;
  const DataNode* leaf = find_leaf(cursor, nullptr);
  while (out.size() < count) {
    const auto v = leaf->lock.read_begin();
    if (!v || leaf->obsolete.load(std::memory_order_acquire)) {
      backoff.wait();
      leaf = find_leaf(cursor, nullptr);
      continue;
    }
    const std::size_t before = out.size();
    leaf->collect_from(cursor, count - before, out);
    const Key kmax = leaf->kmax;
    const DataNode* next = leaf->next_leaf.load(std::memory_order_acquire);
    if (!leaf->lock.validate(*v)) {
      out.resize(before);
      leaf = find_leaf(cursor, nullptr);
      continue;
    }
    if (out.size() >= count || kmax == kKeyMax) {
      break;
    }
    cursor = kmax + 1;
    if (next != nullptr && !next->obsolete.load(std::memory_order_acquire) && next->kmin == cursor) {
      leaf = next;
    } else {
      leaf = find_leaf(cursor, nullptr);
    }
  }
  return out.size();
}

void GappedIndex::structure_modification(DataNode* node, bool contract) {
  std::vector<KeyValue> kv;
  kv.reserve(node->num_keys);
  node->collect(kv);
  const std::size_t n = kv.size();
  InnerNode* parent = node->parent;
  const std::size_t sb = node->slot_begin;
  const std::size_t se = node->slot_end;

  // Replacement children, each with the parent slot range it takes over.
  struct Piece {
    Node* node;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Piece> pieces;
  std::vector<DataNode*> leaves;

  auto place_leaf = [&](DataNode* leaf, std::size_t begin, std::size_t end) {
    leaf->parent = parent;
    leaf->slot_begin = begin;
    leaf->slot_end = end;
    leaf->kmin = parent->slot_lo(begin);
    leaf->kmax = parent->slot_hi(end - 1);
    pieces.push_back({leaf, begin, end});
    leaves.push_back(leaf);
  };

  const double mean_shift = node->inserts_since_smo == 0
                                ? 0.0
                                : static_cast<double>(node->shifts_since_smo) /
                                      static_cast<double>(node->inserts_since_smo);
  const std::size_t expanded = capacity_for(n, config_.min_density);
  const bool can_expand = expanded <= config_.max_slots() &&
                          static_cast<double>(n) <= config_.max_density * static_cast<double>(expanded);

  if (contract) {
    place_leaf(make_leaf(kv, config_.avg_density, true), sb, se);
    counters_.add(Counter::kRetrainCount);
  } else if (can_expand && (mean_shift <= config_.shift_threshold || n < 4)) {
    place_leaf(make_leaf(kv, config_.min_density, true), sb, se);
    counters_.add(Counter::kRetrainCount);
  } else {
    // Sideways split at the parent slot boundary closest to the median key.
    std::size_t best_slot = 0;
    std::size_t best_left = 0;
    std::size_t best_cost = ~std::size_t{0};
    for (std::size_t b = sb + 1; b < se; ++b) {
      const Key lo = parent->slot_lo(b);
      const auto left = static_cast<std::size_t>(
          std::lower_bound(kv.begin(), kv.end(), lo, [](const KeyValue& p, Key k) { return p.key < k; }) -
          kv.begin());
      if (left < 2 || n - left < 2) {
        continue;
      }
      const std::size_t cost = left > n / 2 ? left - n / 2 : n / 2 - left;
      if (cost < best_cost) {
        best_cost = cost;
        best_slot = b;
        best_left = left;
      }
    }
    if (best_cost != ~std::size_t{0}) {
      const std::span<const KeyValue> all(kv);
      place_leaf(make_leaf(all.first(best_left), config_.avg_density, true), sb, best_slot);
      place_leaf(make_leaf(all.subspan(best_left), config_.avg_density, true), best_slot, se);
      counters_.add(Counter::kRetrainCount, 2);
    } else {
      // All keys share one parent slot: push the node down a level.
      const std::size_t max_keys = std::min(max_node_keys(), std::max<std::size_t>(2, (n + 1) / 2));
      InnerNode* child = build_inner(kv, node->kmin, node->kmax, max_keys, true, leaves);
      pieces.push_back({child, sb, se});
      counters_.add(Counter::kRetrainCount, leaves.size());
    }
  }

  // New leaves stay locked until the leaf chain is repaired, so nobody can
  // restructure them while their predecessor still points at `node`.
  for (DataNode* leaf : leaves) {
    const bool locked = leaf->lock.try_lock();
    (void)locked;
  }
  for (std::size_t i = 0; i + 1 < leaves.size(); ++i) {
    leaves[i]->next_leaf.store(leaves[i + 1], std::memory_order_relaxed);
  }
  leaves.back()->next_leaf.store(node->next_leaf.load(std::memory_order_acquire),
                                 std::memory_order_release);

  {
    std::unique_lock lock(parent->mutex);
    for (const Piece& piece : pieces) {
      for (std::size_t s = piece.begin; s < piece.end; ++s) {
        parent->children[s].store(piece.node, std::memory_order_release);
      }
    }
  }
  node->obsolete.store(true, std::memory_order_release);
  link_predecessor(node, leaves.front());

  counters_.add(Counter::kSmoCount);
  for (DataNode* leaf : leaves) {
    leaf->lock.unlock();
  }
  node->lock.unlock();
  retire(node);
}

void GappedIndex::link_predecessor(DataNode* old_node, DataNode* first_new) {
  if (old_node->kmin == 0) {
    return;
  }
  // Locks are only ever taken leftward from a held node, so this cannot deadlock.
  for (;;) {
    DataNode* pred = find_leaf(old_node->kmin - 1, nullptr);
    pred->lock.lock();
    if (pred->obsolete.load(std::memory_order_acquire)) {
      pred->lock.unlock();
      sync::cpu_relax();
      continue;
    }
    pred->next_leaf.store(first_new, std::memory_order_release);
    pred->lock.unlock();
    return;
  }
}

void GappedIndex::retire(DataNode* node) {
  bytes_ -= node->bytes();
  epochs_.retire(node);
  epochs_.advance();
  epochs_.try_reclaim();
}

std::size_t GappedIndex::size_in_bytes() const { return bytes_.load(std::memory_order_relaxed); }

std::vector<GappedIndex::DataNodeInfo> GappedIndex::data_nodes() const {
  std::vector<DataNodeInfo> result;
  struct Item {
    const Node* node;
    std::size_t depth;
  };
  std::vector<Item> stack{{root_, 0}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    if (item.node->is_leaf) {
      const auto* leaf = static_cast<const DataNode*>(item.node);
      result.push_back({leaf->capacity, leaf->num_keys, item.depth, leaf->from_smo});
      continue;
    }
    const auto* inner = static_cast<const InnerNode*>(item.node);
    const Node* prev = nullptr;
    for (std::size_t i = inner->fanout; i-- > 0;) {
      const Node* c = inner->child(i);
      if (c != prev) {
        stack.push_back({c, item.depth + 1});
      }
      prev = c;
    }
  }
  return result;
}

std::size_t GappedIndex::num_keys() const {
  std::size_t total = 0;
  for (const DataNodeInfo& info : data_nodes()) {
    total += info.num_keys;
  }
  return total;
}

void GappedIndex::check_invariants() const {
  std::size_t bytes = 0;
  std::vector<const DataNode*> leaves;
  bool have_prev_key = false;
  Key prev_key = 0;

  auto check_leaf = [&](const DataNode* leaf) {
    if (leaf->obsolete.load()) {
      fail("reachable data node is obsolete");
    }
    if (leaf->lock.is_locked()) {
      fail("data node left locked");
    }
    if (leaf->capacity > std::max(config_.max_slots(), leaf->num_keys + 1)) {
      fail("data node over the size cap");
    }
    std::size_t occupied = 0;
    Key fill = kKeyMax;
    for (std::size_t i = leaf->capacity; i-- > 0;) {
      const Key k = leaf->key_at(i);
      if (leaf->occupied(i)) {
        fill = k;
        ++occupied;
      } else if (k != fill) {
        fail("gap slot " + std::to_string(i) + " does not hold the next key");
      }
    }
    if (occupied != leaf->num_keys) {
      fail("num_keys disagrees with the bitmap");
    }
    for (std::size_t i = leaf->next_occupied(0); i < leaf->capacity; i = leaf->next_occupied(i + 1)) {
      const Key k = leaf->key_at(i);
      if (have_prev_key && k <= prev_key) {
        fail("keys out of order at " + std::to_string(k));
      }
      if (k < leaf->kmin || k > leaf->kmax) {
        fail("key " + std::to_string(k) + " outside its data node range");
      }
      if (leaf->find(k) != leaf->payload_at(i)) {
        fail("search misses present key " + std::to_string(k));
      }
      have_prev_key = true;
      prev_key = k;
    }
    bytes += leaf->bytes();
    leaves.push_back(leaf);
  };

  // Depth-first, children in slot order, so leaves come out in key order.
  auto walk = [&](auto& self, const InnerNode* inner) -> void {
    bytes += inner->bytes();
    std::size_t s = 0;
    while (s < inner->fanout) {
      const Node* c = inner->child(s);
      if (c == nullptr) {
        fail("null child");
      }
      std::size_t e = s + 1;
      while (e < inner->fanout && inner->child(e) == c) {
        ++e;
      }
      const Key lo = inner->slot_lo(s);
      const Key hi = inner->slot_hi(e - 1);
      if (c->is_leaf) {
        const auto* leaf = static_cast<const DataNode*>(c);
        if (leaf->parent != inner || leaf->slot_begin != s || leaf->slot_end != e) {
          fail("data node slot bookkeeping is stale");
        }
        if (leaf->kmin != lo || leaf->kmax != hi) {
          fail("data node range differs from its parent slots");
        }
        check_leaf(leaf);
      } else {
        const auto* child = static_cast<const InnerNode*>(c);
        if (child->range_lo != lo || child->range_hi != hi) {
          fail("inner node range differs from its parent slots");
        }
        self(self, child);
      }
      s = e;
    }
  };
  if (root_->range_lo != 0 || root_->range_hi != kKeyMax) {
    fail("root does not cover the key domain");
  }
  walk(walk, root_);

  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const DataNode* expected = i + 1 < leaves.size() ? leaves[i + 1] : nullptr;
    if (leaves[i]->next_leaf.load() != expected) {
      fail("leaf chain broken after node " + std::to_string(i));
    }
  }
  if (bytes != size_in_bytes()) {
    fail("size accounting off: " + std::to_string(bytes) + " vs " + std::to_string(size_in_bytes()));
  }
}

}  // namespace lidx::gapped
