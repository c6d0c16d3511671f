#include "ppk/parallel.hpp"

namespace ppk {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int threads) noexcept { g_max_threads = std::max(0, threads); }

int max_threads() noexcept {
  const int cap = g_max_threads.load();
  if (cap > 0) return cap;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace ppk
