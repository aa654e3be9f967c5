#include "csdvs/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace csdvs {
namespace {

std::atomic<int> g_override{0};

int default_workers() {
  if (const char* env = std::getenv("CSDVS_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(hw, 1, 8);
}

}  // namespace

int worker_count() {
  int n = g_override.load(std::memory_order_relaxed);
  if (n > 0) return n;
  static const int fallback = default_workers();
  return fallback;
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0, std::memory_order_relaxed); }

}  // namespace csdvs
