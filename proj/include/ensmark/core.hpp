#pragma once

// Shared vocabulary / distribution types.
//
// Everything downstream (reweighting, generation, detection) passes
// TokenDistribution values across module boundaries; the constructor is the
// one place the simplex invariant is enforced.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ensmark {

enum class ErrorCode {
  invalid_argument,
  degenerate_distribution,
  duplicate_key,
  too_small_vocab,
  enumeration_too_large,
  prompt_too_short,
  no_scorable_tokens,
  no_finite_optimum,
  trace_exhausted,
  parse_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::degenerate_distribution: return "DegenerateDistribution";
    case ErrorCode::duplicate_key: return "DuplicateKey";
    case ErrorCode::too_small_vocab: return "TooSmallVocab";
    case ErrorCode::enumeration_too_large: return "EnumerationTooLarge";
    case ErrorCode::prompt_too_short: return "PromptTooShort";
    case ErrorCode::no_scorable_tokens: return "NoScorableTokens";
    case ErrorCode::no_finite_optimum: return "NoFiniteOptimum";
    case ErrorCode::trace_exhausted: return "TraceExhausted";
    case ErrorCode::parse_error: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using TokenId = std::uint32_t;

/// Sum tolerance for a valid distribution.
inline constexpr double kSumTolerance = 1e-9;

class TokenDistribution {
 public:
  TokenDistribution() = default;

  /// Validates `probs` as-is (non-negative, sums to 1 within kSumTolerance).
  static TokenDistribution from_probs(std::vector<double> probs) {
    if (probs.empty()) throw Error(ErrorCode::degenerate_distribution, "empty distribution");
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw Error(ErrorCode::degenerate_distribution, "negative or non-finite probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw Error(ErrorCode::degenerate_distribution,
                  "probabilities sum to " + std::to_string(sum));
    return TokenDistribution(std::move(probs));
  }

  /// Divides by the sum. Used after every reweight layer so float drift does
  /// not accumulate across an ensemble.
  static TokenDistribution renormalized(std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw Error(ErrorCode::degenerate_distribution, "negative or non-finite weight");
      sum += w;
    }
    if (!(sum > 0.0)) throw Error(ErrorCode::degenerate_distribution, "all-zero weights");
    for (double& w : weights) w /= sum;
    return TokenDistribution(std::move(weights));
  }

  static TokenDistribution uniform(std::size_t vocab_size) {
    if (vocab_size == 0) throw Error(ErrorCode::degenerate_distribution, "empty vocabulary");
    return TokenDistribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
  }

  static TokenDistribution point_mass(std::size_t vocab_size, TokenId token) {
    if (token >= vocab_size) throw Error(ErrorCode::invalid_argument, "token out of range");
    std::vector<double> probs(vocab_size, 0.0);
    probs[token] = 1.0;
    return TokenDistribution(std::move(probs));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  friend bool operator==(const TokenDistribution&, const TokenDistribution&) = default;

 private:
  explicit TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

/// Proportional rescaling onto the simplex.
inline TokenDistribution normalize(std::span<const double> weights) {
  return TokenDistribution::renormalized(std::vector<double>(weights.begin(), weights.end()));
}

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(const TokenDistribution& d) {
  double h = 0.0;
  for (double p : d.probs())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// Prompt tokens followed by generated tokens. Only tokens at index >=
/// prompt_len are scored by the detector.
struct TokenSequence {
  std::vector<TokenId> tokens;
  std::size_t prompt_len = 0;

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t generated_len() const noexcept { return tokens.size() - prompt_len; }
  std::span<const TokenId> generated() const noexcept {
    return std::span<const TokenId>(tokens).subspan(prompt_len);
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

class SecretKey {
 public:
  static constexpr std::size_t kBytes = 16;
  using Bytes = std::array<std::uint8_t, kBytes>;

  constexpr SecretKey() = default;
  constexpr explicit SecretKey(const Bytes& bytes) : bytes_(bytes) {}

  /// Parses exactly 32 hex characters (either case).
  static SecretKey from_hex(std::string_view hex) {
    if (hex.size() != 2 * kBytes)
      throw Error(ErrorCode::parse_error,
                  "secret key must be 32 hex characters, got " + std::to_string(hex.size()));
    auto nibble = [&](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
      throw Error(ErrorCode::parse_error, "invalid hex character in secret key");
    };
    Bytes bytes{};
    for (std::size_t i = 0; i < kBytes; ++i)
      bytes[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return SecretKey(bytes);
  }

  std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * kBytes);
    for (std::uint8_t b : bytes_) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xF]);
    }
    return out;
  }

  /// Bytes [0,8) and [8,16), each read little-endian.
  constexpr std::array<std::uint64_t, 2> words() const noexcept {
    std::array<std::uint64_t, 2> w{};
    for (std::size_t half = 0; half < 2; ++half)
      for (std::size_t i = 0; i < 8; ++i)
        w[half] |= static_cast<std::uint64_t>(bytes_[8 * half + i]) << (8 * i);
    return w;
  }

  constexpr const Bytes& bytes() const noexcept { return bytes_; }

  friend constexpr auto operator<=>(const SecretKey&, const SecretKey&) = default;

 private:
  Bytes bytes_{};
};

}  // namespace ensmark
