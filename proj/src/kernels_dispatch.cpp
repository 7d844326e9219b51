#include "blockdep/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace blockdep::kernels {

const Backend* avx2_table_internal();

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
         avx2_table_internal() != nullptr;
#else
  return false;
#endif
}

const Backend* avx2_or_null() {
  return avx2_available() ? avx2_table_internal() : nullptr;
}

namespace {

const Backend& select() {
  const char* force = std::getenv("BLOCKDEP_SIMD");
  if (force != nullptr) {
    if (std::strcmp(force, "avx2") == 0 && avx2_available())
      return *avx2_table_internal();
    return scalar();
  }
  if (const Backend* simd = avx2_or_null()) return *simd;
  return scalar();
}

}  // namespace

const Backend& active() {
  static const Backend& chosen = select();
  return chosen;
}

}  // namespace blockdep::kernels
