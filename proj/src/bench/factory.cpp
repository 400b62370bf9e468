#include "lidx/bench/factory.hpp"

#include <stdexcept>
#include <string>

#include "lidx/btree/btree.hpp"
#include "lidx/chain/chain_index.hpp"
#include "lidx/gapped/gapped_index.hpp"

namespace lidx::bench {

std::unique_ptr<OrderedIndex> make_index(std::string_view name) {
  if (name == "gapped") {
    return std::make_unique<gapped::GappedIndex>();
  }
  if (name == "gapped-m") {
    return std::make_unique<gapped::GappedIndex>(gapped::GappedConfig::with_fill_factor(0.25));
  }
  if (name == "chain") {
    return std::make_unique<chain::ChainIndex>();
  }
  if (name == "btree") {
    return std::make_unique<btree::BTree>();
  }
  throw std::invalid_argument("unknown index '" + std::string(name) + "'");
}

IndexFactory make_factory(std::string_view name) {
  make_index(name);  // reject unknown names up front
  return [n = std::string(name)] { return make_index(n); };
}

std::vector<std::string_view> index_names() { return {"gapped", "gapped-m", "chain", "btree"}; }

bool is_learned(std::string_view name) { return name != "btree"; }

}  // namespace lidx::bench
