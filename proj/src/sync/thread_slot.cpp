#include "lidx/sync/thread_slot.hpp"

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace lidx::sync {
namespace {

struct SlotPool {
  std::mutex mutex;
  std::vector<std::size_t> free_slots;
  std::size_t next = 0;
  std::atomic<std::size_t> high_water{0};
};

SlotPool& pool() {
  static SlotPool instance;
  return instance;
}

struct ThreadSlot {
  std::size_t id;

  ThreadSlot() {
    auto& p = pool();
    std::lock_guard lock(p.mutex);
    if (!p.free_slots.empty()) {
      id = p.free_slots.back();
      p.free_slots.pop_back();
      return;
    }
    if (p.next == kMaxThreads) {
      throw std::runtime_error("too many concurrent threads for lidx thread slots");
    }
    id = p.next++;
    p.high_water.store(p.next, std::memory_order_release);
  }

  ~ThreadSlot() {
    auto& p = pool();
    std::lock_guard lock(p.mutex);
    p.free_slots.push_back(id);
  }
};

}  // namespace

std::size_t thread_slot() {
  thread_local ThreadSlot slot;
  return slot.id;
}

std::size_t thread_slot_high_water() {
  return pool().high_water.load(std::memory_order_acquire);
}

}  // namespace lidx::sync
