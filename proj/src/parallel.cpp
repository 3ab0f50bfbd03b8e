#include "sthjb/parallel.hpp"

#include "sthjb/errors.hpp"

namespace sthjb {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) {
  if (n < 0) throw ArgumentError("thread count must be nonnegative");
  g_threads = n;
}

int thread_count() {
  const int n = g_threads;
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace sthjb
