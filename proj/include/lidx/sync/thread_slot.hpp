#pragma once

#include <cstddef>

namespace lidx::sync {

/// Upper bound on simultaneously live threads that touch an index.
inline constexpr std::size_t kMaxThreads = 512;

/// Small dense id of the calling thread in [0, kMaxThreads). Ids are
/// recycled when threads exit. Throws std::runtime_error if more than
/// kMaxThreads threads are alive at once.
std::size_t thread_slot();

/// One past the largest slot handed out so far.
std::size_t thread_slot_high_water();

}  // namespace lidx::sync
