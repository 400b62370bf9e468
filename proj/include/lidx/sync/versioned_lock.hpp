#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <optional>

#include "lidx/sync/backoff.hpp"

namespace lidx::sync {

/// Optimistic lock word: bit 0 is the exclusive flag, bits 1..63 the version.
///
/// Writers set the flag and bump the version on release, so a lock/unlock
/// cycle adds 2 to the raw word. Readers snapshot the word with read_begin(),
/// read the protected data with relaxed atomics, and accept the read only if
/// validate() sees the same word afterwards.
class VersionedLock {
 public:
  static constexpr std::uint64_t kLockedBit = 1;

  /// Unlocked word to pass to validate(), or nullopt while a writer holds it.
  std::optional<std::uint64_t> read_begin() const noexcept {
    const std::uint64_t word = word_.load(std::memory_order_acquire);
    if (word & kLockedBit) {
      return std::nullopt;
    }
    return word;
  }

  bool validate(std::uint64_t observed) const noexcept {
    std::atomic_thread_fence(std::memory_order_acquire);
    return word_.load(std::memory_order_relaxed) == observed;
  }

  /// Acquires the lock only if nothing happened since read_begin() returned
  /// `observed`.
  bool try_upgrade(std::uint64_t observed) noexcept {
    if (word_.compare_exchange_strong(observed, observed | kLockedBit,
                                      std::memory_order_acquire, std::memory_order_relaxed)) {
      std::atomic_thread_fence(std::memory_order_release);
      return true;
    }
    return false;
  }

  bool try_lock() noexcept {
    const std::uint64_t word = word_.load(std::memory_order_relaxed);
    return (word & kLockedBit) == 0 && try_upgrade(word);
  }

  void lock() noexcept {
    Backoff backoff;
    while (!try_lock()) {
      backoff.wait();
    }
  }

  void unlock() noexcept {
    const std::uint64_t word = word_.load(std::memory_order_relaxed);
    assert((word & kLockedBit) && "unlock of a VersionedLock that is not held");
    word_.store(word + 1, std::memory_order_release);
  }

  bool is_locked() const noexcept {
    return (word_.load(std::memory_order_relaxed) & kLockedBit) != 0;
  }

  std::uint64_t raw() const noexcept { return word_.load(std::memory_order_acquire); }
  std::uint64_t version() const noexcept { return raw() >> 1; }

 private:
  std::atomic<std::uint64_t> word_{0};
};

}  // namespace lidx::sync
