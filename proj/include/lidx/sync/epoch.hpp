#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "lidx/sync/thread_slot.hpp"

namespace lidx::sync {

/// Epoch-based reclamation of unlinked nodes.
///
/// Threads pin the current global epoch while they may hold references into
/// a shared structure. An object retired while the global epoch is e is freed
/// once no thread is pinned at an epoch <= e.
class EpochManager {
 public:
  static constexpr std::uint64_t kIdle = ~std::uint64_t{0};
  static constexpr std::size_t kAdvanceEvery = 256;

  EpochManager();
  ~EpochManager();

  EpochManager(const EpochManager&) = delete;
  EpochManager& operator=(const EpochManager&) = delete;

  /// Pins the calling thread. Calls nest.
  void enter() noexcept;
  void exit() noexcept;

  template <typename T>
  void retire(T* object) {
    retire(static_cast<void*>(object), [](void* p) { delete static_cast<T*>(p); });
  }
  void retire(void* object, void (*deleter)(void*));

  /// Frees everything that is safe to free. Returns the number of objects freed.
  std::size_t try_reclaim();

  void advance() noexcept { global_.fetch_add(1, std::memory_order_acq_rel); }
  std::uint64_t current_epoch() const noexcept { return global_.load(std::memory_order_acquire); }
  std::size_t pending() const;

 private:
  struct Retired {
    void* object;
    void (*deleter)(void*);
  };
  struct alignas(64) Slot {
    std::atomic<std::uint64_t> epoch{kIdle};
    std::uint32_t depth = 0;
  };

  std::size_t reclaim_locked();

  std::unique_ptr<Slot[]> slots_;
  std::atomic<std::uint64_t> global_{1};
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::vector<Retired>> retired_;
  std::size_t pending_ = 0;
  std::size_t retired_since_advance_ = 0;
};

class EpochGuard {
 public:
  explicit EpochGuard(EpochManager& manager) noexcept : manager_(manager) { manager_.enter(); }
  ~EpochGuard() { manager_.exit(); }
  EpochGuard(const EpochGuard&) = delete;
  EpochGuard& operator=(const EpochGuard&) = delete;

 private:
  EpochManager& manager_;
};

}  // namespace lidx::sync
