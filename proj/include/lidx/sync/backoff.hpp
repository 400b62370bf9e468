#pragma once

#include <cstdint>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace lidx::sync {

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#elif defined(__aarch64__)
  asm volatile("yield");
#endif
}

/// Bounded exponential spin; once the bound is reached every further wait
/// yields to the scheduler instead.
class Backoff {
 public:
  void wait() noexcept {
    if (spins_ <= kMaxSpins) {
      for (std::uint32_t i = 0; i < spins_; ++i) {
        cpu_relax();
      }
      spins_ *= 2;
    } else {
      std::this_thread::yield();
    }
  }

  void reset() noexcept { spins_ = 1; }

 private:
  static constexpr std::uint32_t kMaxSpins = 1024;
  std::uint32_t spins_ = 1;
};

}  // namespace lidx::sync
