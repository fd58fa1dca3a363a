#pragma once

// SplitMix64 primitives. All randomness in the library (keys, permutations,
// the synthetic LM, sampling, attacks, experiment seeds) is derived from
// these so that every result is a pure function of its inputs.

#include <cstdint>
#include <initializer_list>
#include <span>

namespace ensmark::prf {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Incremental fold: absorb(w) = mix((state ^ w) + golden).
class Fold {
 public:
  constexpr Fold() = default;
  constexpr explicit Fold(std::uint64_t state) : state_(state) {}

  constexpr Fold& absorb(std::uint64_t word) noexcept {
    state_ = mix((state_ ^ word) + kGolden);
    return *this;
  }

  template <class Word>
  constexpr Fold& absorb_all(std::span<const Word> words) noexcept {
    for (Word w : words) absorb(static_cast<std::uint64_t>(w));
    return *this;
  }

  constexpr std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0;
};

constexpr std::uint64_t fold(std::initializer_list<std::uint64_t> words) noexcept {
  Fold f;
  for (std::uint64_t w : words) f.absorb(w);
  return f.value();
}

constexpr std::uint64_t fold(std::span<const std::uint64_t> words) noexcept {
  return Fold{}.absorb_all(words).value();
}

/// Plain SplitMix64 generator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t operator()() noexcept {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform index in [0, bound) via the high word of r * bound.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

  double unit() noexcept { return to_unit((*this)()); }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

inline double to_unit(std::uint64_t bits) noexcept { return SplitMix64::to_unit(bits); }

// Domain-separation words.
namespace domain {
inline constexpr std::uint64_t kLanguageModel = 0x454e534d2d4c4d00ULL;  // "ENSM-LM"
inline constexpr std::uint64_t kSampling = 0x454e534d2d534d50ULL;       // "ENSM-SMP"
inline constexpr std::uint64_t kAttack = 0x454e534d2d41544bULL;         // "ENSM-ATK"
inline constexpr std::uint64_t kExperiment = 0x454e534d2d455850ULL;     // "ENSM-EXP"
}  // namespace domain

}  // namespace ensmark::prf
