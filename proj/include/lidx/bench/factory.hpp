#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "lidx/bench/runner.hpp"
#include "lidx/core/ordered_index.hpp"

namespace lidx::bench {

/// "gapped", "gapped-m" (gapped at fill factor 0.25), "chain" or "btree".
/// Throws std::invalid_argument for anything else.
std::unique_ptr<OrderedIndex> make_index(std::string_view name);
IndexFactory make_factory(std::string_view name);

std::vector<std::string_view> index_names();
bool is_learned(std::string_view name);

}  // namespace lidx::bench
