#include "signembed/common.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace signembed {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(derive_seed(seed, a) ^ mix64(b + 0x6a09e667f3bcc909ull));
}

double RandomSource::normal(double mean, double stddev) {
  // u in (0, 1] so log(u) is finite.
  double u = 1.0 - uniform01();
  double v = uniform01();
  double r = std::sqrt(-2.0 * std::log(u));
  return mean + stddev * r * std::cos(2.0 * M_PI * v);
}

std::uint64_t RandomSource::uniform_int(std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_int: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

namespace {

std::atomic<unsigned> g_max_threads{0};  // 0 = uninitialized

unsigned env_thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIGNEMBED_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

}  // namespace

void set_max_threads(unsigned n) { g_max_threads.store(n == 0 ? 1 : n); }

unsigned effective_threads() {
  unsigned n = g_max_threads.load();
  if (n == 0) {
    n = env_thread_cap();
    g_max_threads.store(n);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  parallel_for_indexed(n, [&fn](unsigned, std::size_t i) { fn(i); });
}

unsigned parallel_for_indexed(
    std::size_t n, const std::function<void(unsigned worker, std::size_t i)>& fn) {
  if (n == 0) return 1;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(effective_threads(), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return 1;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(t, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return threads;
}

}  // namespace signembed
