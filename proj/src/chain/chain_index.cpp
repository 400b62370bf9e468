#include "lidx/chain/chain_index.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "lidx/pla/pla.hpp"
#include "lidx/sync/backoff.hpp"

namespace lidx::chain {

namespace detail {

struct ChainNode {
  explicit ChainNode(std::size_t len) : length(len), entries(std::make_unique<Entry[]>(len)) {}

  std::size_t slot(Key key) const noexcept {
    const double p = model.predict(key);
    if (!(p > 0.0)) {
      return 0;
    }
    if (p >= static_cast<double>(length)) {
      return length - 1;
    }
    return static_cast<std::size_t>(p);
  }

  std::size_t bytes() const noexcept { return sizeof(ChainNode) + length * sizeof(Entry); }

  pla::LinearModel model;
  const std::size_t length;
  std::unique_ptr<Entry[]> entries;
  std::uint64_t build_size = 0;
  std::atomic<std::uint64_t> inserts{0};
  std::atomic<std::uint64_t> conflicts{0};
  std::atomic<bool> obsolete{false};
};

}  // namespace detail

using detail::ChainNode;
using detail::Entry;

namespace {

struct Snapshot {
  std::uint64_t kind;
  Key key;
  std::uint64_t value;
};

Snapshot read(const Entry& e) noexcept {
  return {e.kind.load(std::memory_order_relaxed), e.key.load(std::memory_order_relaxed),
          e.value.load(std::memory_order_relaxed)};
}

ChainNode* as_node(std::uint64_t value) noexcept { return reinterpret_cast<ChainNode*>(value); }
std::uint64_t as_value(const ChainNode* node) noexcept { return reinterpret_cast<std::uint64_t>(node); }

void fail(const std::string& what) { throw std::logic_error("chain index: " + what); }

}  // namespace

std::size_t ChainConfig::max_entries() const { return max_node_bytes / sizeof(detail::Entry); }

void ChainConfig::validate() const {
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("density must be in (0, 1]");
  }
  if (max_entries() < 4) {
    throw std::invalid_argument("max_node_bytes too small");
  }
  if (!(rebuild_insert_factor > 0.0) || rebuild_conflict_ratio < 0.0) {
    throw std::invalid_argument("bad rebuild thresholds");
  }
}

ChainIndex::ChainIndex(ChainConfig config) : config_(config) {
  config_.validate();
  std::size_t built = 0;
  root_entry_.value.store(as_value(build({}, built)), std::memory_order_release);
  root_entry_.kind.store(detail::kChild, std::memory_order_relaxed);
}

ChainIndex::~ChainIndex() { destroy(root()); }

ChainNode* ChainIndex::root() const { return as_node(root_entry_.value.load(std::memory_order_acquire)); }

void ChainIndex::destroy(ChainNode* top) {
  std::vector<ChainNode*> stack{top};
  while (!stack.empty()) {
    ChainNode* node = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < node->length; ++i) {
      const Entry& e = node->entries[i];
      if (e.kind.load(std::memory_order_relaxed) == detail::kChild) {
        stack.push_back(as_node(e.value.load(std::memory_order_relaxed)));
      }
    }
    bytes_ -= node->bytes();
    delete node;
  }
}

ChainNode* ChainIndex::build(std::span<const KeyValue> pairs, std::size_t& built) {
  const std::size_t n = pairs.size();
  const auto wanted = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / config_.density));
  const std::size_t length = std::min(std::max<std::size_t>(2, wanted), config_.max_entries());
  auto* node = new ChainNode(length);
  node->build_size = n;
  ++built;
  bytes_ += node->bytes();
  if (n == 0) {
    return node;
  }

  std::vector<Key> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = pairs[i].key;
  }
  node->model = pla::fit_least_squares(keys);
  const double scale = static_cast<double>(length) / static_cast<double>(n);
  node->model.slope *= scale;
  node->model.intercept *= scale;
  if (n >= 2 && node->slot(keys.front()) == node->slot(keys.back())) {
    // Endpoint line: first key to slot 0, last key to the last slot.
    node->model = {(static_cast<double>(length) - 0.5) / static_cast<double>(keys.back() - keys.front()),
                   0.0, keys.front()};
  }

  for (std::size_t i = 0; i < n;) {
    const std::size_t s = node->slot(keys[i]);
    std::size_t j = i + 1;
    while (j < n && node->slot(keys[j]) == s) {
      ++j;
    }
    Entry& e = node->entries[s];
    if (j - i == 1) {
      e.key.store(pairs[i].key, std::memory_order_relaxed);
      e.value.store(pairs[i].payload, std::memory_order_relaxed);
      e.kind.store(detail::kData, std::memory_order_relaxed);
    } else {
      e.value.store(as_value(build(pairs.subspan(i, j - i), built)), std::memory_order_relaxed);
      e.kind.store(detail::kChild, std::memory_order_relaxed);
    }
    i = j;
  }
  return node;
}

void ChainIndex::bulk_load(std::span<const KeyValue> pairs) {
  require_bulk_input(pairs);
  destroy(root());
  bytes_ = 0;
  std::size_t built = 0;
  root_entry_.value.store(as_value(build(pairs, built)), std::memory_order_release);
}

std::optional<Payload> ChainIndex::lookup(Key key) const {
  sync::EpochGuard guard(epochs_);
  counters_.add(Counter::kLookups);
  sync::Backoff backoff;
  for (;;) {
    const ChainNode* node = root();
    std::size_t visited = 1;
    bool restart = false;
    while (!restart) {
      const Entry& e = node->entries[node->slot(key)];
      const auto v = e.lock.read_begin();
      if (!v) {
        restart = node->obsolete.load(std::memory_order_acquire);
        backoff.wait();
        continue;
      }
      const Snapshot snap = read(e);
      if (!e.lock.validate(*v)) {
        continue;
      }
      if (node->obsolete.load(std::memory_order_acquire)) {
        restart = true;
        continue;
      }
      if (snap.kind == detail::kChild) {
        node = as_node(snap.value);
        ++visited;
        continue;
      }
      counters_.add(Counter::kNodesTraversed, visited);
      if (snap.kind == detail::kEmpty) {
        return std::nullopt;
      }
      counters_.add(Counter::kKeyComparisons);
      return snap.key == key ? std::optional<Payload>(snap.value) : std::nullopt;
    }
  }
}

bool ChainIndex::insert(Key key, Payload payload) { return write(key, payload, WriteKind::kInsert); }

bool ChainIndex::remove(Key key) { return write(key, 0, WriteKind::kRemove); }

bool ChainIndex::write(Key key, Payload payload, WriteKind kind) {
  sync::EpochGuard guard(epochs_);
  sync::Backoff backoff;
  std::vector<PathStep> path;
  for (;;) {
    path.clear();
    Entry* parent_entry = &root_entry_;
    ChainNode* parent_node = nullptr;
    ChainNode* node = root();
    std::size_t attempts = 0;
    Entry* target = nullptr;
    Snapshot snap{};
    bool restart = false;

    // Walk down until an entry that is not a child is locked.
    while (target == nullptr && !restart) {
      Entry& e = node->entries[node->slot(key)];
      bool locked = false;
      if (attempts < config_.optimistic_retries) {
        ++attempts;
        const auto v = e.lock.read_begin();
        if (!v) {
          restart = node->obsolete.load(std::memory_order_acquire);
          backoff.wait();
          continue;
        }
        snap = read(e);
        if (!e.lock.validate(*v)) {
          continue;
        }
        if (node->obsolete.load(std::memory_order_acquire)) {
          restart = true;
          continue;
        }
        if (snap.kind != detail::kChild) {
          if (!e.lock.try_upgrade(*v)) {
            continue;
          }
          locked = true;
        }
      } else {
        e.lock.lock();
        if (node->obsolete.load(std::memory_order_acquire)) {
          e.lock.unlock();
          restart = true;
          continue;
        }
        snap = read(e);
        locked = snap.kind != detail::kChild;
        if (!locked) {
          e.lock.unlock();
        }
      }
      path.push_back({parent_entry, parent_node, node});
      if (locked) {
        target = &e;
      } else {
        parent_entry = &e;
        parent_node = node;
        node = as_node(snap.value);
        attempts = 0;
      }
    }
    if (restart) {
      continue;
    }

    Entry& e = *target;
    if (kind == WriteKind::kRemove) {
      const bool hit = snap.kind == detail::kData && snap.key == key;
      if (hit) {
        e.kind.store(detail::kEmpty, std::memory_order_relaxed);
      }
      e.lock.unlock();
      if (hit) {
        counters_.add(Counter::kRemoves);
      }
      return hit;
    }

    if (snap.kind == detail::kData && snap.key == key) {
      e.value.store(payload, std::memory_order_relaxed);
      e.lock.unlock();
      counters_.add(Counter::kUpdates);
      return false;
    }
    if (snap.kind == detail::kEmpty) {
      e.key.store(key, std::memory_order_relaxed);
      e.value.store(payload, std::memory_order_relaxed);
      e.kind.store(detail::kData, std::memory_order_relaxed);
      e.lock.unlock();
    } else {
      const KeyValue existing{snap.key, snap.value};
      const KeyValue incoming{key, payload};
      const KeyValue both[2] = {std::min(existing, incoming, [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; }),
                                std::max(existing, incoming, [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; })};
      std::size_t built = 0;
      ChainNode* child = build(both, built);
      e.value.store(as_value(child), std::memory_order_relaxed);
      e.kind.store(detail::kChild, std::memory_order_relaxed);
      e.lock.unlock();
      path.back().node->conflicts.fetch_add(1, std::memory_order_relaxed);
      counters_.add(Counter::kNodesCreated, built);
    }

    for (const PathStep& step : path) {
      step.node->inserts.fetch_add(1, std::memory_order_relaxed);
    }
    counters_.add(Counter::kInserts);
    counters_.add(Counter::kNodesTraversed, path.size());
    maybe_rebuild(path);
    return true;
  }
}

void ChainIndex::maybe_rebuild(const std::vector<PathStep>& path) {
  for (const PathStep& step : path) {
    const auto inserts = static_cast<double>(step.node->inserts.load(std::memory_order_relaxed));
    const auto conflicts = static_cast<double>(step.node->conflicts.load(std::memory_order_relaxed));
    if (inserts > 0 && inserts >= config_.rebuild_insert_factor * static_cast<double>(step.node->build_size) &&
        conflicts >= config_.rebuild_conflict_ratio * inserts) {
      rebuild(step);
      return;
    }
  }
}

void ChainIndex::rebuild(const PathStep& step) {
  Entry* pe = step.parent_entry;
  pe->lock.lock();
  if ((step.parent_node != nullptr && step.parent_node->obsolete.load(std::memory_order_acquire)) ||
      pe->kind.load(std::memory_order_relaxed) != detail::kChild ||
      pe->value.load(std::memory_order_relaxed) != as_value(step.node)) {
    pe->lock.unlock();  // someone else already rebuilt it
    return;
  }

  // Lock every entry of the subtree in key order. Each entry is locked after
  // all of its ancestors, so concurrent rebuilds cannot deadlock.
  std::vector<ChainNode*> old{step.node};
  std::vector<Entry*> held;
  std::vector<KeyValue> pairs;
  struct Frame {
    ChainNode* node;
    std::size_t next;
  };
  std::vector<Frame> stack{{step.node, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == f.node->length) {
      stack.pop_back();
      continue;
    }
    Entry& e = f.node->entries[f.next++];
    e.lock.lock();
    held.push_back(&e);
    const Snapshot snap = read(e);
    if (snap.kind == detail::kData) {
      pairs.push_back({snap.key, snap.value});
    } else if (snap.kind == detail::kChild) {
      old.push_back(as_node(snap.value));
      stack.push_back({as_node(snap.value), 0});
    }
  }

  std::size_t built = 0;
  ChainNode* fresh = build(pairs, built);
  for (ChainNode* node : old) {
    node->obsolete.store(true, std::memory_order_release);
  }
  pe->value.store(as_value(fresh), std::memory_order_release);
  for (Entry* e : held) {
    e->lock.unlock();
  }
  pe->lock.unlock();
  counters_.add(Counter::kRetrainCount, built);
  counters_.add(Counter::kSmoCount);
  for (ChainNode* node : old) {
    retire(node);
  }
}

void ChainIndex::retire(ChainNode* node) {
  bytes_ -= node->bytes();
  epochs_.retire(node);
  epochs_.advance();
  epochs_.try_reclaim();
}

std::size_t ChainIndex::range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const {
  out.clear();
  counters_.add(Counter::kScans);
  if (count == 0) {
    return 0;
  }
  sync::EpochGuard guard(epochs_);
  sync::Backoff backoff;
  struct Frame {
    const ChainNode* node;
    std::size_t next;
  };
  std::vector<Frame> stack;
  bool done = false;
  while (!done) {
    // (Re)start at the first key not yet emitted.
    if (!out.empty() && out.back().key == ~Key{0}) {
      break;
    }
    const Key lower = out.empty() ? start : out.back().key + 1;
    stack.clear();
    const ChainNode* top = root();
    stack.push_back({top, top->slot(lower)});
    bool restart = false;
    while (!stack.empty() && !restart) {
      Frame& f = stack.back();
      if (f.next == f.node->length) {
        stack.pop_back();
        continue;
      }
      const Entry& e = f.node->entries[f.next];
      const auto v = e.lock.read_begin();
      if (!v) {
        restart = f.node->obsolete.load(std::memory_order_acquire);
        backoff.wait();
        continue;
      }
      const Snapshot snap = read(e);
      if (!e.lock.validate(*v)) {
        continue;
      }
      if (f.node->obsolete.load(std::memory_order_acquire)) {
        restart = true;
        continue;
      }
      ++f.next;
      const Key floor_key = out.empty() ? start : out.back().key + 1;
      if (snap.kind == detail::kData && snap.key >= floor_key) {
        out.push_back({snap.key, snap.value});
        if (out.size() == count) {
          break;
        }
      } else if (snap.kind == detail::kChild) {
        const ChainNode* child = as_node(snap.value);
        stack.push_back({child, child->slot(floor_key)});
      }
    }
    done = !restart;
  }
  return out.size();
}

std::vector<ChainIndex::NodeInfo> ChainIndex::nodes() const {
  std::vector<NodeInfo> result;
  std::vector<std::pair<const ChainNode*, std::size_t>> stack{{root(), 0}};
  while (!stack.empty()) {
    const auto [node, depth] = stack.back();
    stack.pop_back();
    NodeInfo info;
    info.length = node->length;
    info.depth = depth;
    info.build_size = node->build_size;
    info.inserts = node->inserts.load();
    info.conflicts = node->conflicts.load();
    for (std::size_t i = 0; i < node->length; ++i) {
      const Entry& e = node->entries[i];
      if (e.kind == detail::kData) {
        ++info.data_entries;
      } else if (e.kind == detail::kChild) {
        ++info.child_entries;
        stack.push_back({as_node(e.value), depth + 1});
      }
    }
    result.push_back(info);
  }
  return result;
}

std::size_t ChainIndex::num_keys() const {
  std::size_t total = 0;
  for (const NodeInfo& info : nodes()) {
    total += info.data_entries;
  }
  return total;
}

void ChainIndex::check_invariants() const {
  std::size_t bytes = 0;
  bool have_prev = false;
  Key prev = 0;
  // Every key must route back to the entry it is stored in; that also
  // implies every child's keys share its parent slot.
  auto routes_to = [&](Key key, const Entry* where) {
    const ChainNode* node = root();
    for (;;) {
      const Entry& e = node->entries[node->slot(key)];
      if (&e == where) {
        return true;
      }
      if (e.kind != detail::kChild) {
        return false;
      }
      node = as_node(e.value);
    }
  };
  auto walk = [&](auto& self, const ChainNode* node) -> void {
    if (node->obsolete.load()) {
      fail("reachable node is obsolete");
    }
    const auto wanted =
        static_cast<std::size_t>(std::ceil(static_cast<double>(node->build_size) / config_.density));
    if (node->length != std::min(std::max<std::size_t>(2, wanted), config_.max_entries())) {
      fail("node length does not match its build size");
    }
    bytes += node->bytes();
    for (std::size_t i = 0; i < node->length; ++i) {
      const Entry& e = node->entries[i];
      if (e.lock.is_locked()) {
        fail("entry left locked");
      }
      if (e.kind == detail::kData) {
        const Key k = e.key;
        if (have_prev && k <= prev) {
          fail("keys out of order at " + std::to_string(k));
        }
        if (!routes_to(k, &e)) {
          fail("key " + std::to_string(k) + " does not route to its entry");
        }
        have_prev = true;
        prev = k;
      } else if (e.kind == detail::kChild) {
        self(self, as_node(e.value));
      } else if (e.kind != detail::kEmpty) {
        fail("bad entry kind");
      }
    }
  };
  walk(walk, root());
  if (bytes != size_in_bytes()) {
    fail("size accounting off: " + std::to_string(bytes) + " vs " + std::to_string(size_in_bytes()));
  }
}

}  // namespace lidx::chain
