#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace signembed {

// Error taxonomy. The CLI maps ValidationError (and subclasses) to exit
// code 1 and IoError/FormatError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Input that is structurally valid but numerically unusable, e.g. a pose
// with no visible shoulders.
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// File exists but is not in the expected format (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer, used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Seeded random source with platform-independent distributions.
// std::normal_distribution and friends are implementation-defined, so the
// distributions here are hand-rolled on top of mt19937_64.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; one fresh pair per call, second value discarded so the
  // stream position is a pure function of the call count.
  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n) by rejection sampling.
  std::uint64_t uniform_int(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Worker cap for parallel sections: min(SIGNEMBED_THREADS, hardware).
// set_max_threads(1) forces serial execution (deterministic mode).
void set_max_threads(unsigned n);
unsigned effective_threads();

// Static-partition parallel map over [0, n). Chunk assignment depends only
// on n and the thread count, so results are stable for a fixed thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Same partition but the callback also receives the worker index, so
// callers can keep per-worker accumulators and reduce them in worker order.
// Returns the number of workers used.
unsigned parallel_for_indexed(
    std::size_t n, const std::function<void(unsigned worker, std::size_t i)>& fn);

}  // namespace signembed
