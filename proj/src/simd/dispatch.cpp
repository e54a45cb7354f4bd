#include "chafee/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace chafee::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CHAFEE_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("CHAFEE_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
  }
  return detect_isa();
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2: {
      static const bool ok = cpu_has_avx2();
      return ok;
    }
  }
  return false;
}

Isa detect_isa() { return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("ISA not available on this machine: " + std::string(isa_name(isa)));
  }
  selected().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa) {
#if defined(CHAFEE_HAVE_AVX2_TU)
  if (isa == Isa::Avx2) {
    if (!isa_available(Isa::Avx2)) throw std::invalid_argument("avx2 kernels not available");
    return avx2_kernels();
  }
#endif
  (void)isa;
  return scalar_kernels();
}

const KernelTable& kernels() { return kernels_for(active_isa()); }

}  // namespace chafee::simd
