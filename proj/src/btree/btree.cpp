#include "lidx/btree/btree.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <stdexcept>
#include <string>

namespace lidx::btree {

namespace {
constexpr std::size_t kMax = BTree::kFanout;
constexpr std::size_t kMin = kMax / 2;

void fail(const std::string& what) { throw std::logic_error("btree: " + what); }
}  // namespace

struct BTree::Node {
  explicit Node(bool is_leaf) : leaf(is_leaf) {}
  const bool leaf;
  std::size_t count = 0;  // keys in a leaf, children in an inner node
  // One spare slot each so a node can overflow by one before it splits.
  std::array<Key, kMax + 1> keys{};
};

struct BTree::Leaf : Node {
  Leaf() : Node(true) {}
  std::array<Payload, kMax + 1> values{};
  Leaf* next = nullptr;
};

/// keys[i] separates children[i] and children[i + 1]: every key in
/// children[i + 1] is >= keys[i].
struct BTree::Inner : Node {
  Inner() : Node(false) {}
  std::array<Node*, kMax + 1> children{};
};

struct BTree::Split {
  Node* right = nullptr;
  Key separator = 0;
};

BTree::BTree() {
  root_ = new Leaf;
  leaves_ = 1;
}

BTree::~BTree() { clear(); }

void BTree::clear() {
  std::vector<Node*> stack;
  if (root_ != nullptr) {
    stack.push_back(root_);
  }
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (n->leaf) {
      delete static_cast<Leaf*>(n);
    } else {
      auto* in = static_cast<Inner*>(n);
      for (std::size_t i = 0; i < in->count; ++i) {
        stack.push_back(in->children[i]);
      }
      delete in;
    }
  }
  root_ = nullptr;
  leaves_ = 0;
  inners_ = 0;
}

namespace {

// Splits n items into ceil(n / kMax) groups whose sizes differ by at most one.
std::vector<std::size_t> even_groups(std::size_t n) {
  const std::size_t groups = std::max<std::size_t>(1, (n + kMax - 1) / kMax);
  std::vector<std::size_t> sizes(groups, n / groups);
  for (std::size_t i = 0; i < n % groups; ++i) {
    ++sizes[i];
  }
  return sizes;
}

std::size_t child_index(const BTree::Inner* in, Key key) {
  const auto* begin = in->keys.data();
  return static_cast<std::size_t>(std::upper_bound(begin, begin + in->count - 1, key) - begin);
}

}  // namespace

void BTree::bulk_load(std::span<const KeyValue> pairs) {
  require_bulk_input(pairs);
  std::unique_lock lock(mutex_);
  clear();

  std::vector<Node*> level;
  std::vector<Key> lows;  // smallest key under each node of `level`
  Leaf* prev = nullptr;
  std::size_t pos = 0;
  for (std::size_t size : even_groups(pairs.size())) {
    auto* leaf = new Leaf;
    for (std::size_t i = 0; i < size; ++i, ++pos) {
      leaf->keys[i] = pairs[pos].key;
      leaf->values[i] = pairs[pos].payload;
    }
    leaf->count = size;
    if (prev != nullptr) {
      prev->next = leaf;
    }
    prev = leaf;
    level.push_back(leaf);
    lows.push_back(leaf->keys[0]);
  }
  leaves_ = level.size();

  while (level.size() > 1) {
    std::vector<Node*> parents;
    std::vector<Key> parent_lows;
    std::size_t at = 0;
    for (std::size_t size : even_groups(level.size())) {
      auto* in = new Inner;
      for (std::size_t i = 0; i < size; ++i) {
        in->children[i] = level[at + i];
        if (i > 0) {
          in->keys[i - 1] = lows[at + i];
        }
      }
      in->count = size;
      parents.push_back(in);
      parent_lows.push_back(lows[at]);
      at += size;
    }
    inners_ += parents.size();
    level = std::move(parents);
    lows = std::move(parent_lows);
  }
  root_ = level.front();
}

const BTree::Leaf* BTree::find_leaf(Key key, std::size_t* visited) const {
  const Node* n = root_;
  std::size_t v = 1;
  while (!n->leaf) {
    const auto* in = static_cast<const Inner*>(n);
    n = in->children[child_index(in, key)];
    ++v;
  }
  if (visited != nullptr) {
    *visited = v;
  }
  return static_cast<const Leaf*>(n);
}

std::optional<Payload> BTree::lookup(Key key) const {
  std::shared_lock lock(mutex_);
  counters_.add(Counter::kLookups);
  std::size_t visited = 0;
  const Leaf* leaf = find_leaf(key, &visited);
  counters_.add(Counter::kNodesTraversed, visited);
  const auto* begin = leaf->keys.data();
  const auto* it = std::lower_bound(begin, begin + leaf->count, key);
  if (it != begin + leaf->count && *it == key) {
    return leaf->values[static_cast<std::size_t>(it - begin)];
  }
  return std::nullopt;
}

BTree::Split BTree::insert_into(Node* node, Key key, Payload payload, bool& inserted) {
  if (node->leaf) {
    auto* leaf = static_cast<Leaf*>(node);
    const auto* begin = leaf->keys.data();
    const auto pos = static_cast<std::size_t>(std::lower_bound(begin, begin + leaf->count, key) - begin);
    if (pos < leaf->count && leaf->keys[pos] == key) {
      leaf->values[pos] = payload;
      inserted = false;
      return {};
    }
    for (std::size_t i = leaf->count; i > pos; --i) {
      leaf->keys[i] = leaf->keys[i - 1];
      leaf->values[i] = leaf->values[i - 1];
    }
    leaf->keys[pos] = key;
    leaf->values[pos] = payload;
    ++leaf->count;
    inserted = true;
    if (leaf->count <= kMax) {
      return {};
    }
    auto* right = new Leaf;
    ++leaves_;
    const std::size_t keep = leaf->count - leaf->count / 2;
    right->count = leaf->count - keep;
    for (std::size_t i = 0; i < right->count; ++i) {
      right->keys[i] = leaf->keys[keep + i];
      right->values[i] = leaf->values[keep + i];
    }
    leaf->count = keep;
    right->next = leaf->next;
    leaf->next = right;
    return {right, right->keys[0]};
  }

  auto* in = static_cast<Inner*>(node);
  const std::size_t ci = child_index(in, key);
  const Split split = insert_into(in->children[ci], key, payload, inserted);
  if (split.right == nullptr) {
    return {};
  }
  for (std::size_t i = in->count; i > ci + 1; --i) {
    in->children[i] = in->children[i - 1];
    in->keys[i - 1] = in->keys[i - 2];
  }
  in->children[ci + 1] = split.right;
  in->keys[ci] = split.separator;
  ++in->count;
  if (in->count <= kMax) {
    return {};
  }
  auto* right = new Inner;
  ++inners_;
  const std::size_t keep = in->count - in->count / 2;
  right->count = in->count - keep;
  for (std::size_t i = 0; i < right->count; ++i) {
    right->children[i] = in->children[keep + i];
    if (i > 0) {
      right->keys[i - 1] = in->keys[keep + i - 1];
    }
  }
  const Key separator = in->keys[keep - 1];
  in->count = keep;
  return {right, separator};
}

bool BTree::insert(Key key, Payload payload) {
  std::unique_lock lock(mutex_);
  bool inserted = false;
  const Split split = insert_into(root_, key, payload, inserted);
  if (split.right != nullptr) {
    auto* top = new Inner;
    ++inners_;
    top->children[0] = root_;
    top->children[1] = split.right;
    top->keys[0] = split.separator;
    top->count = 2;
    root_ = top;
  }
  counters_.add(inserted ? Counter::kInserts : Counter::kUpdates);
  return inserted;
}

bool BTree::remove_from(Node* node, Key key) {
  if (node->leaf) {
    auto* leaf = static_cast<Leaf*>(node);
    const auto* begin = leaf->keys.data();
    const auto pos = static_cast<std::size_t>(std::lower_bound(begin, begin + leaf->count, key) - begin);
    if (pos == leaf->count || leaf->keys[pos] != key) {
      return false;
    }
    for (std::size_t i = pos; i + 1 < leaf->count; ++i) {
      leaf->keys[i] = leaf->keys[i + 1];
      leaf->values[i] = leaf->values[i + 1];
    }
    --leaf->count;
    return true;
  }
  auto* in = static_cast<Inner*>(node);
  const std::size_t ci = child_index(in, key);
  if (!remove_from(in->children[ci], key)) {
    return false;
  }
  if (in->children[ci]->count < kMin) {
    rebalance(in, ci);
  }
  return true;
}

void BTree::rebalance(Inner* parent, std::size_t ci) {
  Node* child = parent->children[ci];
  Node* left = ci > 0 ? parent->children[ci - 1] : nullptr;
  Node* right = ci + 1 < parent->count ? parent->children[ci + 1] : nullptr;

  if (child->leaf) {
    auto* c = static_cast<Leaf*>(child);
    if (left != nullptr && left->count > kMin) {
      auto* l = static_cast<Leaf*>(left);
      for (std::size_t i = c->count; i > 0; --i) {
        c->keys[i] = c->keys[i - 1];
        c->values[i] = c->values[i - 1];
      }
      --l->count;
      c->keys[0] = l->keys[l->count];
      c->values[0] = l->values[l->count];
      ++c->count;
      parent->keys[ci - 1] = c->keys[0];
      return;
    }
    if (right != nullptr && right->count > kMin) {
      auto* r = static_cast<Leaf*>(right);
      c->keys[c->count] = r->keys[0];
      c->values[c->count] = r->values[0];
      ++c->count;
      for (std::size_t i = 0; i + 1 < r->count; ++i) {
        r->keys[i] = r->keys[i + 1];
        r->values[i] = r->values[i + 1];
      }
      --r->count;
      parent->keys[ci] = r->keys[0];
      return;
    }
  } else {
    auto* c = static_cast<Inner*>(child);
    if (left != nullptr && left->count > kMin) {
      auto* l = static_cast<Inner*>(left);
      for (std::size_t i = c->count; i > 0; --i) {
        c->children[i] = c->children[i - 1];
      }
      for (std::size_t i = c->count - 1; i > 0; --i) {
        c->keys[i] = c->keys[i - 1];
      }
      c->children[0] = l->children[l->count - 1];
      c->keys[0] = parent->keys[ci - 1];
      parent->keys[ci - 1] = l->keys[l->count - 2];
      --l->count;
      ++c->count;
      return;
    }
    if (right != nullptr && right->count > kMin) {
      auto* r = static_cast<Inner*>(right);
      c->children[c->count] = r->children[0];
      c->keys[c->count - 1] = parent->keys[ci];
      parent->keys[ci] = r->keys[0];
      for (std::size_t i = 0; i + 1 < r->count; ++i) {
        r->children[i] = r->children[i + 1];
      }
      for (std::size_t i = 0; i + 2 < r->count; ++i) {
        r->keys[i] = r->keys[i + 1];
      }
      --r->count;
      ++c->count;
      return;
    }
  }

  // Neither sibling can lend: merge with one of them. `j` is the separator
  // between the two merged nodes.
  const std::size_t j = left != nullptr ? ci - 1 : ci;
  Node* a = parent->children[j];
  Node* b = parent->children[j + 1];
  if (a->leaf) {
    auto* la = static_cast<Leaf*>(a);
    auto* lb = static_cast<Leaf*>(b);
    for (std::size_t i = 0; i < lb->count; ++i) {
      la->keys[la->count + i] = lb->keys[i];
      la->values[la->count + i] = lb->values[i];
    }
    la->count += lb->count;
    la->next = lb->next;
    delete lb;
    --leaves_;
  } else {
    auto* ia = static_cast<Inner*>(a);
    auto* ib = static_cast<Inner*>(b);
    ia->keys[ia->count - 1] = parent->keys[j];
    for (std::size_t i = 0; i < ib->count; ++i) {
      ia->children[ia->count + i] = ib->children[i];
      if (i + 1 < ib->count) {
        ia->keys[ia->count + i] = ib->keys[i];
      }
    }
    ia->count += ib->count;
    delete ib;
    --inners_;
  }
  for (std::size_t i = j + 1; i + 1 < parent->count; ++i) {
    parent->children[i] = parent->children[i + 1];
  }
  for (std::size_t i = j; i + 2 < parent->count; ++i) {
    parent->keys[i] = parent->keys[i + 1];
  }
  --parent->count;
}

bool BTree::remove(Key key) {
  std::unique_lock lock(mutex_);
  const bool removed = remove_from(root_, key);
  if (!root_->leaf && root_->count == 1) {
    auto* old = static_cast<Inner*>(root_);
    root_ = old->children[0];
    delete old;
    --inners_;
  }
  if (removed) {
    counters_.add(Counter::kRemoves);
  }
  return removed;
}

std::size_t BTree::range_scan(Key start, std::size_t count, std::vector<KeyValue>& out) const {
  out.clear();
  std::shared_lock lock(mutex_);
  counters_.add(Counter::kScans);
  if (count == 0) {
    return 0;
  }
  const Leaf* leaf = find_leaf(start, nullptr);
  const auto* begin = leaf->keys.data();
  auto pos = static_cast<std::size_t>(std::lower_bound(begin, begin + leaf->count, start) - begin);
  while (leaf != nullptr && out.size() < count) {
    for (; pos < leaf->count && out.size() < count; ++pos) {
      out.push_back({leaf->keys[pos], leaf->values[pos]});
    }
    leaf = leaf->next;
    pos = 0;
  }
  return out.size();
}

std::size_t BTree::size_in_bytes() const {
  std::shared_lock lock(mutex_);
  return sizeof(BTree) + leaves_ * sizeof(Leaf) + inners_ * sizeof(Inner);
}

std::size_t BTree::height() const {
  std::shared_lock lock(mutex_);
  std::size_t h = 1;
  for (const Node* n = root_; !n->leaf; n = static_cast<const Inner*>(n)->children[0]) {
    ++h;
  }
  return h;
}

std::size_t BTree::num_keys() const {
  std::shared_lock lock(mutex_);
  const Node* n = root_;
  while (!n->leaf) {
    n = static_cast<const Inner*>(n)->children[0];
  }
  std::size_t total = 0;
  for (const auto* leaf = static_cast<const Leaf*>(n); leaf != nullptr; leaf = leaf->next) {
    total += leaf->count;
  }
  return total;
}

void BTree::validate() const {
  std::shared_lock lock(mutex_);
  std::vector<const Leaf*> leaves;
  std::size_t inners = 0;
  std::size_t leaf_depth = 0;

  // Checks keys of `node` lie in [lo, hi) where has_lo/has_hi say whether
  // the bound exists.
  auto walk = [&](auto& self, const Node* node, std::size_t depth, bool has_lo, Key lo, bool has_hi,
                  Key hi) -> void {
    const bool is_root = node == root_;
    if (node->count > kMax) {
      fail("node over capacity");
    }
    if (node->leaf) {
      const auto* leaf = static_cast<const Leaf*>(node);
      if (!is_root && leaf->count < kMin) {
        fail("leaf under half full");
      }
      for (std::size_t i = 0; i < leaf->count; ++i) {
        if (i > 0 && leaf->keys[i] <= leaf->keys[i - 1]) {
          fail("leaf keys out of order");
        }
        if ((has_lo && leaf->keys[i] < lo) || (has_hi && leaf->keys[i] >= hi)) {
          fail("leaf key outside separator bounds");
        }
      }
      if (leaves.empty()) {
        leaf_depth = depth;
      } else if (depth != leaf_depth) {
        fail("leaves at different depths");
      }
      leaves.push_back(leaf);
      return;
    }
    const auto* in = static_cast<const Inner*>(node);
    ++inners;
    if (in->count < (is_root ? 2 : kMin)) {
      fail("inner node under-full");
    }
    for (std::size_t i = 0; i + 1 < in->count; ++i) {
      if (i > 0 && in->keys[i] <= in->keys[i - 1]) {
        fail("separators out of order");
      }
      if ((has_lo && in->keys[i] < lo) || (has_hi && in->keys[i] >= hi)) {
        fail("separator outside parent bounds");
      }
    }
    for (std::size_t i = 0; i < in->count; ++i) {
      const bool child_has_lo = i > 0 || has_lo;
      const Key child_lo = i > 0 ? in->keys[i - 1] : lo;
      const bool child_has_hi = i + 1 < in->count || has_hi;
      const Key child_hi = i + 1 < in->count ? in->keys[i] : hi;
      self(self, in->children[i], depth + 1, child_has_lo, child_lo, child_has_hi, child_hi);
    }
  };
  walk(walk, root_, 0, false, 0, false, 0);

  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i]->next != (i + 1 < leaves.size() ? leaves[i + 1] : nullptr)) {
      fail("leaf chain broken");
    }
  }
  if (leaves.size() != leaves_ || inners != inners_) {
    fail("node counts out of sync");
  }
}

}  // namespace lidx::btree
