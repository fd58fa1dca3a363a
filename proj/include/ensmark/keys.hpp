#pragma once

// Per-step watermark keys: k = h(sk, a-gram context), and the per-run history
// of contexts already used for watermarking.

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/prf.hpp"

namespace ensmark {

/// The a tokens immediately preceding the position being generated/scored.
using ContextWindow = std::span<const TokenId>;

inline constexpr std::size_t kDefaultContextWindow = 2;

struct WatermarkKey {
  std::uint64_t seed = 0;
  friend constexpr auto operator<=>(const WatermarkKey&, const WatermarkKey&) = default;
};

/// Fold of [sk.word0, sk.word1, member_index, ctx...]. Bit-exact; see
/// testdata/prf_vectors.json.
inline WatermarkKey prf_derive(const SecretKey& sk, ContextWindow ctx,
                               std::uint64_t member_index = 0) noexcept {
  const auto w = sk.words();
  prf::Fold f;
  f.absorb(w[0]).absorb(w[1]).absorb(member_index);
  for (TokenId t : ctx) f.absorb(t);
  return WatermarkKey{f.value()};
}

inline void require_distinct(std::span<const SecretKey> sks) {
  if (sks.empty()) throw Error(ErrorCode::invalid_argument, "at least one secret key required");
  std::vector<SecretKey> sorted(sks.begin(), sks.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error(ErrorCode::duplicate_key, "ensemble secret keys must be pairwise distinct");
}

/// One key per ensemble member (distinct secret keys, member index 0).
inline std::vector<WatermarkKey> derive_all(std::span<const SecretKey> sks, ContextWindow ctx) {
  require_distinct(sks);
  std::vector<WatermarkKey> keys;
  keys.reserve(sks.size());
  for (const SecretKey& sk : sks) keys.push_back(prf_derive(sk, ctx, 0));
  return keys;
}

/// Contexts already watermarked in one generation run.
class ContextHistory {
 public:
  /// True iff `ctx` was seen before; records it otherwise.
  bool check_and_record(ContextWindow ctx) {
    return !seen_.emplace(ctx.begin(), ctx.end()).second;
  }

  bool contains(ContextWindow ctx) const {
    return seen_.contains(std::vector<TokenId>(ctx.begin(), ctx.end()));
  }

  std::size_t size() const noexcept { return seen_.size(); }

 private:
  struct Hash {
    std::size_t operator()(const std::vector<TokenId>& v) const noexcept {
      return static_cast<std::size_t>(prf::Fold{}.absorb_all(std::span<const TokenId>(v)).value());
    }
  };
  std::unordered_set<std::vector<TokenId>, Hash> seen_;
};

}  // namespace ensmark
