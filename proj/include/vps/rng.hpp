#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vps {

// Single injectable randomness source. Every component that needs
// randomness takes one of these so seeded runs are reproducible.
class Rng {
 public:
  Rng() : engine_(std::random_device{}()) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
    return dist(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Lowercase hex token of `hex_chars` characters.
  std::string hex_token(std::size_t hex_chars) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(hex_chars);
    for (std::size_t i = 0; i < hex_chars; ++i) {
      out.push_back(kHex[below(16)]);
    }
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vps
