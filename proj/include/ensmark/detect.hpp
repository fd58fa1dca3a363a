#pragma once

// Ensemble detection. Each secret key yields a DiPmark-style score
// (green fraction - 1/2); the ensemble statistic is their sum, tested with the
// one-sided Hoeffding bound over all nT green indicators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/reweight.hpp"

namespace ensmark {

struct PerKeyScore {
  std::size_t green_count = 0;
  std::size_t scored_tokens = 0;
  double score = 0.0;  // green_count / scored_tokens - 0.5

  static PerKeyScore from_counts(std::size_t green, std::size_t scored) {
    if (scored == 0) throw Error(ErrorCode::no_scorable_tokens, "no scored tokens");
    if (green > scored) throw Error(ErrorCode::invalid_argument, "green count exceeds scored tokens");
    return PerKeyScore{green, scored, static_cast<double>(green) / static_cast<double>(scored) - 0.5};
  }

  friend bool operator==(const PerKeyScore&, const PerKeyScore&) = default;
};

enum class Aggregation { sum, z_mean };

inline std::string_view to_string(Aggregation a) { return a == Aggregation::sum ? "sum" : "z_mean"; }

/// Green iff the token sits in the last ceil(N/2) slots of the keyed
/// permutation, the half DiP reweighting moves mass towards.
inline bool green_indicator(TokenId token, WatermarkKey key, std::size_t vocab_size) {
  require_vocab(vocab_size);
  if (token >= vocab_size) throw Error(ErrorCode::invalid_argument, "token out of range");
  return keyed_position(key, vocab_size, token) >= vocab_size / 2;
}

/// Token indices the detector scores: non-prompt positions with a full
/// a-gram inside the text, optionally dropping repeated contexts.
inline std::vector<std::size_t> scorable_positions(const TokenSequence& seq, std::size_t window,
                                                   bool skip_repeats) {
  if (window == 0) throw Error(ErrorCode::invalid_argument, "context window must be >= 1");
  if (seq.prompt_len > seq.tokens.size())
    throw Error(ErrorCode::invalid_argument, "prompt_len exceeds sequence length");
  std::vector<std::size_t> out;
  ContextHistory history;
  const std::span<const TokenId> tokens(seq.tokens);
  for (std::size_t t = std::max(seq.prompt_len, window); t < tokens.size(); ++t) {
    if (skip_repeats && history.check_and_record(tokens.subspan(t - window, window))) continue;
    out.push_back(t);
  }
  if (out.empty()) throw Error(ErrorCode::no_scorable_tokens, "sequence has no scorable tokens");
  return out;
}

namespace detail {

inline PerKeyScore score_positions(const TokenSequence& seq, std::span<const std::size_t> positions,
                                   const SecretKey& sk, std::size_t window, std::size_t vocab_size) {
  const std::span<const TokenId> tokens(seq.tokens);
  std::size_t green = 0;
  for (std::size_t t : positions) {
    const WatermarkKey k = prf_derive(sk, tokens.subspan(t - window, window), 0);
    if (green_indicator(tokens[t], k, vocab_size)) ++green;
  }
  return PerKeyScore::from_counts(green, positions.size());
}

}  // namespace detail

inline PerKeyScore score_sequence(const TokenSequence& seq, const SecretKey& sk, std::size_t window,
                                  std::size_t vocab_size, bool skip_repeats = false) {
  const auto positions = scorable_positions(seq, window, skip_repeats);
  return detail::score_positions(seq, positions, sk, window, vocab_size);
}

inline double clamp_p(double log_p) {
  return std::max(std::exp(log_p), std::numeric_limits<double>::denorm_min());
}

/// ln of the one-sided Hoeffding bound exp(-2 T max(s,0)^2).
inline double log_p_value_single(const PerKeyScore& s) {
  const double pos = std::max(s.score, 0.0);
  return -2.0 * static_cast<double>(s.scored_tokens) * pos * pos;
}

inline double p_value_single(const PerKeyScore& s) {
  if (s.scored_tokens == 0) throw Error(ErrorCode::no_scorable_tokens, "T must be >= 1");
  return std::min(1.0, clamp_p(log_p_value_single(s)));
}

/// ln of exp(-(2T/n) max(s_ens,0)^2).
inline double log_p_value_ensemble(double s_ens, std::size_t n, std::size_t scored_tokens) {
  const double pos = std::max(s_ens, 0.0);
  return -(2.0 * static_cast<double>(scored_tokens) / static_cast<double>(n)) * pos * pos;
}

/// Sum of scores over the exact null deviation 0.5 sqrt(n/T).
inline double aggregate_z(std::span<const PerKeyScore> per_key) {
  if (per_key.empty()) throw Error(ErrorCode::invalid_argument, "no per-key scores");
  const std::size_t scored = per_key.front().scored_tokens;
  double sum = 0.0;
  for (const auto& s : per_key) {
    if (s.scored_tokens != scored)
      throw Error(ErrorCode::invalid_argument, "per-key scores cover different token counts");
    sum += s.score;
  }
  const double n = static_cast<double>(per_key.size());
  return sum / (0.5 * std::sqrt(n / static_cast<double>(scored)));
}

/// Decision threshold in the units of `agg` whose Hoeffding FPR is `fpr`.
inline double threshold_for_fpr(double fpr, std::size_t n, std::size_t scored_tokens, Aggregation agg) {
  if (!(fpr > 0.0 && fpr < 1.0)) throw Error(ErrorCode::invalid_argument, "FPR must lie in (0,1)");
  const double log_inv = -std::log(fpr);
  if (agg == Aggregation::z_mean) return std::sqrt(2.0 * log_inv);
  return std::sqrt(static_cast<double>(n) * log_inv / (2.0 * static_cast<double>(scored_tokens)));
}

struct DetectOptions {
  /// Exactly one of these decides; fpr wins when both are set.
  std::optional<double> threshold;
  std::optional<double> fpr;
  bool skip_repeats = false;
  Aggregation aggregation = Aggregation::sum;
};

struct DetectionReport {
  std::vector<PerKeyScore> per_key;
  double s_ens = 0.0;
  double z = 0.0;
  double p_single_best = 1.0;
  double p_ens = 1.0;
  double log_p_ens = 0.0;  // exact even where p_ens underflows
  double threshold = 0.0;
  bool decision = false;
  Aggregation aggregation = Aggregation::sum;
};

inline DetectionReport detect_ensemble(const TokenSequence& seq, const EnsembleConfig& cfg,
                                       std::size_t vocab_size, const DetectOptions& opts) {
  cfg.validate();
  require_vocab(vocab_size);
  const auto positions = scorable_positions(seq, cfg.context_window, opts.skip_repeats);
  for (std::size_t t : positions)
    if (seq.tokens[t] >= vocab_size) throw Error(ErrorCode::invalid_argument, "token out of range");

  DetectionReport r;
  r.aggregation = opts.aggregation;
  r.per_key.reserve(cfg.n());
  double best_log_single = 0.0;
  for (const SecretKey& sk : cfg.secret_keys) {
    r.per_key.push_back(detail::score_positions(seq, positions, sk, cfg.context_window, vocab_size));
    r.s_ens += r.per_key.back().score;
    best_log_single = std::min(best_log_single, log_p_value_single(r.per_key.back()));
  }
  const std::size_t scored = positions.size();
  r.z = aggregate_z(r.per_key);
  r.p_single_best = std::min(1.0, clamp_p(best_log_single));
  r.log_p_ens = log_p_value_ensemble(r.s_ens, cfg.n(), scored);
  r.p_ens = std::min(1.0, clamp_p(r.log_p_ens));

  if (opts.fpr)
    r.threshold = threshold_for_fpr(*opts.fpr, cfg.n(), scored, opts.aggregation);
  else if (opts.threshold)
    r.threshold = *opts.threshold;
  else
    throw Error(ErrorCode::invalid_argument, "detection needs a threshold or a target FPR");
  const double statistic = opts.aggregation == Aggregation::sum ? r.s_ens : r.z;
  r.decision = statistic >= r.threshold;
  return r;
}

}  // namespace ensmark
