#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace balab {

/// SplitMix64 finalizer. Used both to hash stream keys and to seed the
/// per-stream generator state.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the label bytes.
constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) {
    std::uint64_t z = key;
    for (auto& s : state_) {
      z += 0x9E3779B97F4A7C15ULL;
      s = mix64(z);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exp(1) by inversion; never returns 0.
  double exponential() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return -std::log(u);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

/// Names one independent random stream: a pure function of
/// (master seed, trial index, label). Distinct triples give streams that are
/// independent for all practical purposes.
struct RandomnessContract {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::string label;

  [[nodiscard]] std::uint64_t key() const {
    std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
    h = mix64(h ^ (trial + 0x9E3779B97F4A7C15ULL));
    return mix64(h ^ hash_label(label));
  }

  [[nodiscard]] Stream stream() const { return Stream(key()); }

  /// Same seed and trial with a different label.
  [[nodiscard]] RandomnessContract with_label(std::string l) const { return {seed, trial, std::move(l)}; }
  [[nodiscard]] RandomnessContract child(std::string_view suffix) const {
    return {seed, trial, label + "/" + std::string(suffix)};
  }
  [[nodiscard]] RandomnessContract with_trial(std::uint64_t t) const { return {seed, t, label}; }
};

/// Default master seed, overridable with the BALAB_SEED environment variable.
std::uint64_t default_seed();

}  // namespace balab
