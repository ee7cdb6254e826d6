#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lsicert {

/// Deterministic tree of seeds. Every stream of randomness in the toolkit is
/// derived from one root seed by naming (or numbering) child nodes, so the
/// same root seed always reproduces the same draws regardless of how work is
/// scheduled.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t seed() const { return key_; }

  SeedTree child(std::string_view name) const {
    // FNV-1a over the name, then mixed with the parent key.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return SeedTree(key_, mix(h));
  }

  SeedTree child(std::uint64_t index) const { return SeedTree(key_, mix(index + 0x9e3779b97f4a7c15ULL)); }

  std::mt19937_64 engine() const { return std::mt19937_64(key_); }

 private:
  SeedTree(std::uint64_t parent, std::uint64_t salt) : key_(mix(parent ^ (salt + 0x3c6ef372fe94f82bULL))) {}

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace lsicert
