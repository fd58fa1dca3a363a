#pragma once

// Distribution sources for generation: a deterministic synthetic LM keyed on
// the a-gram context, and a replayed trace of distributions read from JSONL.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/prf.hpp"

namespace ensmark {

/// Anything that yields P_M(. | context) for generation step `step`.
template <class M>
concept LanguageModel = requires(const M& m, ContextWindow ctx, std::size_t step) {
  { m.vocab_size() } -> std::convertible_to<std::size_t>;
  { m.next(ctx, step) } -> std::same_as<TokenDistribution>;
};

/// logit_j = beta * u_j with u_j in [0,1) from the PRF of (seed, ctx, j);
/// P = softmax(logits). beta = 0 is uniform; larger beta lowers entropy.
struct SyntheticLM {
  std::uint64_t seed = 0;
  std::size_t vocab = 1000;
  double beta = 4.0;

  std::size_t vocab_size() const noexcept { return vocab; }

  void validate() const {
    if (vocab < 2) throw Error(ErrorCode::too_small_vocab, "synthetic LM needs N >= 2");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw Error(ErrorCode::invalid_argument, "peakedness beta must be finite and >= 0");
  }

  TokenDistribution next(ContextWindow ctx, std::size_t /*step*/) const {
    prf::Fold prefix;
    prefix.absorb(prf::domain::kLanguageModel).absorb(seed).absorb(ctx.size());
    for (TokenId t : ctx) prefix.absorb(t);

    std::vector<double> logits(vocab);
    double max_logit = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) {
      logits[j] = beta * prf::to_unit(prf::Fold(prefix).absorb(j).value());
      max_logit = std::max(max_logit, logits[j]);
    }
    for (double& l : logits) l = std::exp(l - max_logit);
    return TokenDistribution::renormalized(std::move(logits));
  }

  friend bool operator==(const SyntheticLM&, const SyntheticLM&) = default;
};

inline TokenDistribution next_distribution(const SyntheticLM& lm, ContextWindow ctx) {
  return lm.next(ctx, 0);
}

/// Step t of generation gets entry t of the trace, whatever the context.
class DistributionTrace {
 public:
  DistributionTrace() = default;
  explicit DistributionTrace(std::vector<TokenDistribution> steps) : steps_(std::move(steps)) {
    for (const auto& d : steps_)
      if (d.size() != steps_.front().size())
        throw Error(ErrorCode::invalid_argument, "trace distributions differ in vocabulary size");
  }

  std::size_t vocab_size() const noexcept { return steps_.empty() ? 0 : steps_.front().size(); }
  std::size_t length() const noexcept { return steps_.size(); }

  TokenDistribution next(ContextWindow /*ctx*/, std::size_t step) const {
    if (step >= steps_.size())
      throw Error(ErrorCode::trace_exhausted,
                  "trace has " + std::to_string(steps_.size()) + " steps, step " +
                      std::to_string(step) + " requested");
    return steps_[step];
  }

 private:
  std::vector<TokenDistribution> steps_;
};

/// Inverse-CDF draw in token-id order: first j with u < cdf(j).
inline TokenId sample_token(const TokenDistribution& d, std::uint64_t rng_seed, std::uint64_t step) {
  const double u = prf::to_unit(prf::fold({prf::domain::kSampling, rng_seed, step}));
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] <= 0.0) continue;
    cdf += d[j];
    last_positive = j;
    if (u < cdf) return static_cast<TokenId>(j);
  }
  // u landed in the rounding gap above the final cdf.
  return static_cast<TokenId>(last_positive);
}

static_assert(LanguageModel<SyntheticLM>);
static_assert(LanguageModel<DistributionTrace>);

}  // namespace ensmark
