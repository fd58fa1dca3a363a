#pragma once

// Unbiased reweight strategies and their n-fold sequential ensemble.
//
// DiP reweight with parameter alpha: order the vocabulary by a keyed
// permutation, take the CDF F of P in that order, and give the token at
// permuted position t the mass
//
//   [max(F(t)-alpha,0) - max(F(t-1)-alpha,0)]
//     + [max(F(t)-(1-alpha),0) - max(F(t-1)-(1-alpha),0)].
//
// Averaged over uniformly random permutations this returns P exactly; the
// ensemble composes n such layers under independent keys.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/prf.hpp"

namespace ensmark {

enum class StrategyKind {
  dip,
  gamma,  // DiP with alpha fixed at 0.5
  // Further unbiased strategies slot in here; the ensemble layer only calls
  // apply_reweight.
};

struct ReweightStrategy {
  StrategyKind kind = StrategyKind::dip;
  double alpha = 0.3;

  static ReweightStrategy dip(double alpha) {
    ReweightStrategy s{StrategyKind::dip, alpha};
    s.validate();
    return s;
  }
  static ReweightStrategy gamma() { return ReweightStrategy{StrategyKind::gamma, 0.5}; }

  void validate() const {
    if (kind == StrategyKind::gamma && alpha != 0.5)
      throw Error(ErrorCode::invalid_argument, "gamma reweight has alpha = 0.5");
    if (!(alpha > 0.0 && alpha <= 0.5))
      throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 0.5]");
  }

  friend bool operator==(const ReweightStrategy&, const ReweightStrategy&) = default;
};

inline std::string_view to_string(StrategyKind kind) {
  return kind == StrategyKind::gamma ? "gamma" : "dip";
}

struct EnsembleConfig {
  ReweightStrategy strategy;
  std::vector<SecretKey> secret_keys;  // one per member; n = size()
  std::size_t context_window = kDefaultContextWindow;

  std::size_t n() const noexcept { return secret_keys.size(); }

  void validate() const {
    strategy.validate();
    require_distinct(secret_keys);
    if (context_window == 0)
      throw Error(ErrorCode::invalid_argument, "context window must be at least 1");
  }

  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

/// order()[position] = token id.
class KeyedPermutation {
 public:
  explicit KeyedPermutation(std::vector<TokenId> order) : order_(std::move(order)) {}

  std::size_t size() const noexcept { return order_.size(); }
  std::span<const TokenId> order() const noexcept { return order_; }
  TokenId operator[](std::size_t position) const noexcept { return order_[position]; }

  std::vector<std::size_t> positions() const {
    std::vector<std::size_t> pos(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) pos[order_[i]] = i;
    return pos;
  }

  bool is_bijection() const {
    std::vector<bool> hit(order_.size(), false);
    for (TokenId t : order_) {
      if (t >= order_.size() || hit[t]) return false;
      hit[t] = true;
    }
    return true;
  }

 private:
  std::vector<TokenId> order_;
};

inline void require_vocab(std::size_t vocab_size) {
  if (vocab_size < 2) throw Error(ErrorCode::too_small_vocab, "vocabulary needs at least 2 tokens");
}

/// Fisher-Yates (from the back) driven by SplitMix64 seeded with the key.
inline KeyedPermutation keyed_permutation(WatermarkKey key, std::size_t vocab_size) {
  require_vocab(vocab_size);
  std::vector<TokenId> order(vocab_size);
  std::iota(order.begin(), order.end(), TokenId{0});
  prf::SplitMix64 rng(key.seed);
  for (std::size_t i = vocab_size - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(order[i], order[j]);
  }
  return KeyedPermutation(std::move(order));
}

/// Position of `token` in keyed_permutation(key, vocab_size), found by
/// following that one element through the shuffle (no O(N) storage).
inline std::size_t keyed_position(WatermarkKey key, std::size_t vocab_size, TokenId token) noexcept {
  std::size_t pos = token;
  prf::SplitMix64 rng(key.seed);
  for (std::size_t i = vocab_size - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    if (pos == i)
      pos = j;
    else if (pos == j)
      pos = i;
  }
  return pos;
}

/// Reweight under an explicit token ordering. This is the primitive both the
/// keyed path and the permutation-enumeration oracle go through.
inline TokenDistribution reweight_permuted(const ReweightStrategy& strategy,
                                           const TokenDistribution& p,
                                           std::span<const TokenId> order) {
  if (order.size() != p.size())
    throw Error(ErrorCode::invalid_argument, "permutation and distribution sizes differ");
  const double lo = strategy.alpha;
  const double hi = 1.0 - strategy.alpha;
  std::vector<double> out(p.size());
  double cdf = 0.0, lo_prev = 0.0, hi_prev = 0.0;
  for (TokenId token : order) {
    cdf += p[token];
    const double lo_now = std::max(cdf - lo, 0.0);
    const double hi_now = std::max(cdf - hi, 0.0);
    out[token] = (lo_now - lo_prev) + (hi_now - hi_prev);
    lo_prev = lo_now;
    hi_prev = hi_now;
  }
  return TokenDistribution::renormalized(std::move(out));
}

inline TokenDistribution apply_reweight(const ReweightStrategy& strategy, const TokenDistribution& p,
                                        WatermarkKey key) {
  switch (strategy.kind) {
    case StrategyKind::dip:
    case StrategyKind::gamma:
      return reweight_permuted(strategy, p, keyed_permutation(key, p.size()).order());
  }
  throw Error(ErrorCode::invalid_argument, "unknown strategy");
}

/// Sequential view: P^i = F(P^{i-1}, k_i).
inline TokenDistribution ensemble_apply(const ReweightStrategy& strategy, TokenDistribution p,
                                        std::span<const WatermarkKey> keys) {
  for (WatermarkKey k : keys) p = apply_reweight(strategy, p, k);
  return p;
}

inline TokenDistribution ensemble_apply(const EnsembleConfig& cfg, const TokenDistribution& p,
                                        ContextWindow ctx) {
  if (ctx.size() != cfg.context_window)
    throw Error(ErrorCode::invalid_argument, "context length differs from the configured window");
  const auto keys = derive_all(cfg.secret_keys, ctx);
  return ensemble_apply(cfg.strategy, p, keys);
}

inline constexpr std::size_t kEnumerationBudget = 1'000'000;

/// All N! orderings of [0, N) in lexicographic order.
inline std::vector<std::vector<TokenId>> all_permutations(std::size_t vocab_size) {
  if (vocab_size > 9) throw Error(ErrorCode::enumeration_too_large, "N! too large to enumerate");
  std::vector<TokenId> perm(vocab_size);
  std::iota(perm.begin(), perm.end(), TokenId{0});
  std::vector<std::vector<TokenId>> out;
  do out.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

/// Exact E[ENS_n(P)] with each key drawn uniformly from `key_space`, by
/// averaging over all |key_space|^n key tuples.
inline TokenDistribution exact_expectation(const ReweightStrategy& strategy, const TokenDistribution& p,
                                           std::size_t n,
                                           std::span<const std::vector<TokenId>> key_space) {
  if (n == 0 || key_space.empty())
    throw Error(ErrorCode::invalid_argument, "need n >= 1 and a non-empty key space");
  double tuples = 1.0;
  for (std::size_t i = 0; i < n; ++i) tuples *= static_cast<double>(key_space.size());
  if (tuples > static_cast<double>(kEnumerationBudget))
    throw Error(ErrorCode::enumeration_too_large,
                std::to_string(static_cast<std::uint64_t>(tuples)) + " key tuples exceed budget");

  std::vector<double> acc(p.size(), 0.0);
  std::vector<std::size_t> digits(n, 0);
  // Layer outputs are cached per prefix so each tuple costs one reweight.
  std::vector<TokenDistribution> layer(n + 1);
  layer[0] = p;
  std::size_t valid_prefix = 0;
  for (;;) {
    for (std::size_t i = valid_prefix; i < n; ++i)
      layer[i + 1] = reweight_permuted(strategy, layer[i], key_space[digits[i]]);
    for (std::size_t v = 0; v < p.size(); ++v) acc[v] += layer[n][v];

    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < key_space.size()) break;
      digits[pos] = 0;
      if (pos == 0) {
        for (double& a : acc) a /= tuples;
        return TokenDistribution::from_probs(std::move(acc));
      }
    }
    valid_prefix = pos;
  }
}

}  // namespace ensmark
