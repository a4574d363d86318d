#include <cstdlib>
#include <string_view>

#include "fedopt/kernels/kernels.hpp"

namespace fedopt::kernels {

#ifndef FEDOPT_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

const KernelTable& select() {
  const char* env = std::getenv("FEDOPT_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace fedopt::kernels
