#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace rpeval {

// FNV-1a, the stable hash behind fingerprints, digests and seeding.
// std::hash is process-local by contract, so it never appears here.
inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a_u64(std::uint64_t v,
                                  std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xFFu;
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// splitmix64. Fixed algorithm, identical sequence on every platform;
// std::uniform_int_distribution is implementation-defined and would break
// byte-identical golden runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

 private:
  std::uint64_t state_;
};

// Per-sample stream: results are independent of execution order.
inline Rng make_sample_rng(std::uint64_t global_seed,
                           std::string_view sample_id) {
  return Rng(fnv1a(sample_id, fnv1a_u64(global_seed)));
}

// Draw `count` distinct indices from [0, pool_size), partial Fisher-Yates.
// Returned indices are sorted ascending so callers keep pool order.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t pool_size,
                                        std::size_t count);

}  // namespace rpeval
