#include <cstdlib>
#include <string>

#include "ppk/kernels.hpp"

namespace ppk::kernels {

std::string_view name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(PPK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(PPK_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available() noexcept {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table(Isa isa) noexcept {
  if (!supported(isa)) return detail::kScalarTable;
  switch (isa) {
#if defined(PPK_HAVE_AVX2)
    case Isa::Avx2:
      return detail::kAvx2Table;
#endif
#if defined(PPK_HAVE_NEON)
    case Isa::Neon:
      return detail::kNeonTable;
#endif
    default:
      return detail::kScalarTable;
  }
}

namespace {

Isa select() noexcept {
  if (const char* forced = std::getenv("PPK_SIMD")) {
    const std::string want(forced);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == name(isa) && supported(isa)) return isa;
    }
  }
  const std::vector<Isa> all = available();
  return all.back();
}

}  // namespace

Isa active() noexcept {
  static const Isa chosen = select();
  return chosen;
}

const KernelTable& active_table() noexcept {
  static const KernelTable& chosen = table(active());
  return chosen;
}

}  // namespace ppk::kernels
