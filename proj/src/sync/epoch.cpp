#include "lidx/sync/epoch.hpp"

#include <algorithm>

namespace lidx::sync {

EpochManager::EpochManager() : slots_(std::make_unique<Slot[]>(kMaxThreads)) {}

EpochManager::~EpochManager() {
  for (auto& [epoch, bucket] : retired_) {
    for (const Retired& r : bucket) {
      r.deleter(r.object);
    }
  }
}

void EpochManager::enter() noexcept {
  Slot& slot = slots_[thread_slot()];
  if (slot.depth++ == 0) {
    slot.epoch.store(global_.load(std::memory_order_acquire), std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_seq_cst);
  }
}

void EpochManager::exit() noexcept {
  Slot& slot = slots_[thread_slot()];
  if (--slot.depth == 0) {
    slot.epoch.store(kIdle, std::memory_order_release);
  }
}

void EpochManager::retire(void* object, void (*deleter)(void*)) {
  std::lock_guard lock(mutex_);
  retired_[global_.load(std::memory_order_acquire)].push_back({object, deleter});
  ++pending_;
  if (++retired_since_advance_ >= kAdvanceEvery) {
    retired_since_advance_ = 0;
    advance();
    reclaim_locked();
  }
}

std::size_t EpochManager::try_reclaim() {
  std::lock_guard lock(mutex_);
  return reclaim_locked();
}

std::size_t EpochManager::reclaim_locked() {
  std::atomic_thread_fence(std::memory_order_seq_cst);
  std::uint64_t oldest_pinned = kIdle;
  const std::size_t live = thread_slot_high_water();
  for (std::size_t i = 0; i < live; ++i) {
    oldest_pinned = std::min(oldest_pinned, slots_[i].epoch.load(std::memory_order_acquire));
  }
  std::size_t freed = 0;
  auto it = retired_.begin();
  while (it != retired_.end() && it->first < oldest_pinned) {
    for (const Retired& r : it->second) {
      r.deleter(r.object);
    }
    freed += it->second.size();
    it = retired_.erase(it);
  }
  pending_ -= freed;
  return freed;
}

std::size_t EpochManager::pending() const {
  std::lock_guard lock(mutex_);
  return pending_;
}

}  // namespace lidx::sync
