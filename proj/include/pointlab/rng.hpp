#pragma once

// Counter-based randomness: every draw is a pure function of (key, index), so
// windows can be extended or shifted without disturbing existing draws.

#include <cstdint>

namespace pointlab {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t key, std::int64_t index) {
  return mix64(key ^ mix64(static_cast<std::uint64_t>(index) + 0x632BE59BD9B4E019ull));
}

// Uniform double in [0, 1) for (key, index).
constexpr double uniform_at(std::uint64_t key, std::int64_t index) {
  return static_cast<double>(counter_hash(key, index) >> 11) * 0x1.0p-53;
}

// Child seed for a task identified by (a, b); independent of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(master ^ mix64(a + 0x243F6A8885A308D3ull)) ^ mix64(b + 0x13198A2E03707344ull));
}

}  // namespace pointlab
