#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ridematch/simd/kernels.hpp"

namespace ridematch::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* forced = std::getenv("RIDEMATCH_SIMD")) {
    const std::string f = forced;
    if (f == "scalar") return Backend::scalar;
    if (f == "avx2" && backend_supported(Backend::avx2)) return Backend::avx2;
    if (f == "neon" && backend_supported(Backend::neon)) return Backend::neon;
  }
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Backend::neon: return detail::neon_table() != nullptr;
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw std::invalid_argument("SIMD backend '" + std::string(to_string(b)) +
                                "' is not available on this CPU/build");
  }
  current().store(b, std::memory_order_relaxed);
}

const KernelTable& table(Backend b) {
  switch (b) {
    case Backend::avx2:
      if (auto* t = detail::avx2_table()) return *t;
      break;
    case Backend::neon:
      if (auto* t = detail::neon_table()) return *t;
      break;
    case Backend::scalar:
      break;
  }
  return detail::scalar_table();
}

const KernelTable& kernels() { return table(active_backend()); }

}  // namespace ridematch::simd
