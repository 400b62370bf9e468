#include "lidx/btree/btree.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "test_util.hpp"

namespace lidx::btree {
namespace {

using lidx::testing::random_keys;
using lidx::testing::random_ops;
using lidx::testing::with_payloads;

TEST(BTree, EmptyTree) {
  BTree tree;
  EXPECT_FALSE(tree.lookup(3).has_value());
  EXPECT_FALSE(tree.remove(3));
  EXPECT_TRUE(tree.range_scan(0, 10).empty());
  EXPECT_EQ(tree.height(), 1u);
  tree.validate();
}

TEST(BTree, InsertLookupRoundTrip) {
  BTree tree;
  const auto keys = random_keys(20'000, 1);
  for (Key k : keys) {
    ASSERT_TRUE(tree.insert(k, k * 2));
  }
  tree.validate();
  for (Key k : keys) {
    ASSERT_EQ(tree.lookup(k), k * 2);
  }
  EXPECT_FALSE(tree.insert(keys[5], 1));
  EXPECT_EQ(tree.lookup(keys[5]), 1u);
  EXPECT_GT(tree.height(), 2u);
}

TEST(BTree, BulkLoadShapes) {
  for (std::size_t n : {1, 2, 63, 64, 65, 128, 129, 4096, 4097, 100'000}) {
    BTree tree;
    const auto pairs = with_payloads(random_keys(n, n));
    tree.bulk_load(pairs);
    tree.validate();
    EXPECT_EQ(tree.num_keys(), n);
    for (const auto& [k, v] : pairs) {
      ASSERT_EQ(tree.lookup(k), v);
    }
  }
}

TEST(BTree, FullScanIsSorted) {
  BTree tree;
  const auto keys = random_keys(10'000, 2);
  tree.bulk_load(with_payloads(keys));
  const auto rows = tree.range_scan(0, keys.size());
  ASSERT_EQ(rows.size(), keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ASSERT_EQ(rows[i].key, keys[i]);
  }
}

TEST(BTree, RemoveDownToEmpty) {
  BTree tree;
  const auto keys = random_keys(5000, 3);
  tree.bulk_load(with_payloads(keys));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const Key k = keys[(i * 7919) % keys.size()];
    ASSERT_TRUE(tree.remove(k));
    if (i % 97 == 0) {
      tree.validate();
    }
  }
  EXPECT_EQ(tree.num_keys(), 0u);
  EXPECT_EQ(tree.height(), 1u);
  tree.validate();
}

TEST(BTree, MatchesOracleOnRandomOps) {
  const auto pairs = with_payloads(random_keys(20'000, 4));
  BTree tree;
  tree.bulk_load(pairs);
  ReferenceOracle oracle(pairs);
  const auto ops = random_ops(300'000, pairs.back().key + 1000, 4);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    ASSERT_EQ(apply_to_index(tree, ops[i]), oracle.apply(ops[i])) << "op " << i;
    if (i % 50'000 == 0) {
      tree.validate();
    }
  }
  tree.validate();
  EXPECT_EQ(tree.num_keys(), oracle.contents().size());
}

TEST(BTree, ConcurrentDisjointInserts) {
  BTree tree;
  const auto keys = random_keys(40'000, 5);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < keys.size(); i += 4) {
        tree.insert(keys[i], i);
      }
    });
  }
  for (auto& th : threads) {
    th.join();
  }
  tree.validate();
  EXPECT_EQ(tree.num_keys(), keys.size());
}

TEST(BTree, SizeCoversKeys) {
  BTree tree;
  tree.bulk_load(with_payloads(random_keys(50'000, 6)));
  EXPECT_GE(tree.size_in_bytes(), 50'000u * 16);
}

}  // namespace
}  // namespace lidx::btree
