#pragma once

// Watermarked generation. For each step: take the last a tokens as context;
// if that context was already used in this run, sample from P_M untouched,
// otherwise reweight P_M through the n-key ensemble and sample from that.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/lm.hpp"
#include "ensmark/reweight.hpp"

namespace ensmark {

struct GenerateOptions {
  /// Seed the history with every a-gram inside the prompt before step 1.
  bool preseed_history = false;
};

struct GenerationRecord {
  TokenSequence sequence;
  std::vector<bool> watermarked_mask;  // one per generated token
  EnsembleConfig config;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

namespace detail {

template <LanguageModel M, class Reweight>
GenerationRecord generate_impl(const M& lm, std::size_t window, std::span<const TokenId> prompt,
                               std::size_t length, std::uint64_t rng_seed,
                               const GenerateOptions& opts, Reweight&& reweight) {
  if (length == 0) throw Error(ErrorCode::invalid_argument, "generation length must be >= 1");
  if (window == 0) throw Error(ErrorCode::invalid_argument, "context window must be >= 1");
  if (prompt.size() < window)
    throw Error(ErrorCode::prompt_too_short,
                "prompt has " + std::to_string(prompt.size()) + " tokens, window needs " +
                    std::to_string(window));
  for (TokenId t : prompt)
    if (t >= lm.vocab_size()) throw Error(ErrorCode::invalid_argument, "prompt token out of range");

  GenerationRecord rec;
  rec.rng_seed = rng_seed;
  auto& tokens = rec.sequence.tokens;
  tokens.reserve(prompt.size() + length);
  tokens.assign(prompt.begin(), prompt.end());
  rec.sequence.prompt_len = prompt.size();
  rec.watermarked_mask.reserve(length);

  ContextHistory history;
  if (opts.preseed_history)
    for (std::size_t end = window; end < prompt.size(); ++end)
      history.check_and_record(prompt.subspan(end - window, window));

  for (std::size_t step = 0; step < length; ++step) {
    const ContextWindow ctx(tokens.data() + tokens.size() - window, window);
    const TokenDistribution p = lm.next(ctx, step);
    bool watermarked = false;
    TokenId next;
    if (history.check_and_record(ctx)) {
      next = sample_token(p, rng_seed, step);
    } else {
      std::optional<TokenDistribution> q = reweight(p, ctx);
      watermarked = q.has_value();
      next = sample_token(q ? *q : p, rng_seed, step);
    }
    tokens.push_back(next);
    rec.watermarked_mask.push_back(watermarked);
  }
  return rec;
}

}  // namespace detail

template <LanguageModel M>
GenerationRecord generate(const M& lm, const EnsembleConfig& cfg, std::span<const TokenId> prompt,
                          std::size_t length, std::uint64_t rng_seed, const GenerateOptions& opts = {}) {
  cfg.validate();
  require_vocab(lm.vocab_size());
  auto rec = detail::generate_impl(
      lm, cfg.context_window, prompt, length, rng_seed, opts,
      [&](const TokenDistribution& p, ContextWindow ctx) -> std::optional<TokenDistribution> {
        return ensemble_apply(cfg, p, ctx);
      });
  rec.config = cfg;
  return rec;
}

/// Same sampling stream as generate(), never reweights; mask is all false.
template <LanguageModel M>
GenerationRecord generate_unwatermarked(const M& lm, std::size_t window, std::span<const TokenId> prompt,
                                        std::size_t length, std::uint64_t rng_seed) {
  require_vocab(lm.vocab_size());
  return detail::generate_impl(lm, window, prompt, length, rng_seed, {},
                               [](const TokenDistribution&, ContextWindow) {
                                 return std::optional<TokenDistribution>{};
                               });
}

}  // namespace ensmark
