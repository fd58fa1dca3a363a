#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ensmark/detect.hpp"
#include "ensmark/generate.hpp"
#include "ensmark/harness.hpp"
#include "ensmark/stats.hpp"

using namespace ensmark;

namespace {

EnsembleConfig keyed_config(std::uint64_t seed, std::size_t n, double alpha = 0.3) {
  EnsembleConfig cfg;
  cfg.strategy = ReweightStrategy::dip(alpha);
  cfg.secret_keys = harness::derive_secret_keys(seed, n);
  return cfg;
}

const SyntheticLM kLm{24301, 1000, 4.0};

std::vector<TokenId> prompt_for(std::uint64_t seed) { return harness::random_prompt(seed, 4, kLm.vocab); }

}  // namespace

TEST(Score, FromCounts) {
  const auto s = PerKeyScore::from_counts(150, 250);
  EXPECT_NEAR(s.score, 0.1, 1e-15);
  EXPECT_NEAR(PerKeyScore::from_counts(0, 10).score, -0.5, 1e-15);
  EXPECT_THROW(PerKeyScore::from_counts(1, 0), Error);
  EXPECT_THROW(PerKeyScore::from_counts(11, 10), Error);
}

TEST(PValue, HoeffdingExamples) {
  EXPECT_NEAR(p_value_single(PerKeyScore::from_counts(300, 500)), std::exp(-10.0), 1e-18);
  EXPECT_NEAR(log_p_value_single(PerKeyScore::from_counts(250, 250)), -125.0, 1e-12);
  EXPECT_DOUBLE_EQ(p_value_single(PerKeyScore::from_counts(100, 250)), 1.0);
  EXPECT_DOUBLE_EQ(log_p_value_ensemble(-0.3, 3, 250), 0.0);
}

TEST(PValue, EnsembleOfOneIsSingleKey) {
  for (std::size_t g : {125u, 140u, 170u, 250u}) {
    const auto s = PerKeyScore::from_counts(g, 250);
    EXPECT_DOUBLE_EQ(log_p_value_ensemble(s.score, 1, 250), log_p_value_single(s));
  }
}

TEST(PValue, HugeScoresKeepLogAndClampP) {
  const double lp = log_p_value_ensemble(5.0, 10, 2000);
  EXPECT_NEAR(lp, -10000.0, 1e-9);
  EXPECT_GT(clamp_p(lp), 0.0);
}

TEST(ZScore, Example) {
  std::vector<PerKeyScore> s(5, PerKeyScore::from_counts(150, 250));
  EXPECT_NEAR(aggregate_z(s), 1.0 / std::sqrt(0.02), 1e-12);
  s.push_back(PerKeyScore::from_counts(10, 20));
  EXPECT_THROW(aggregate_z(s), Error);
}

TEST(Threshold, InvertsTheBound) {
  for (std::size_t n : {1u, 5u}) {
    const double t = threshold_for_fpr(1e-3, n, 250, Aggregation::sum);
    EXPECT_NEAR(log_p_value_ensemble(t, n, 250), std::log(1e-3), 1e-12);
  }
  EXPECT_NEAR(threshold_for_fpr(0.01, 3, 100, Aggregation::z_mean), std::sqrt(2.0 * std::log(100.0)), 1e-12);
  EXPECT_THROW(threshold_for_fpr(0.0, 1, 10, Aggregation::sum), Error);
}

TEST(Scorable, SkipsPromptAndRepeats) {
  const TokenSequence seq{{1, 2, 3, 1, 2, 3, 1, 2}, 2};
  EXPECT_EQ(scorable_positions(seq, 2, false).size(), 6u);
  // Windows at t=2..7: (1,2) (2,3) (3,1) (1,2)* (2,3)* (3,1)*
  EXPECT_EQ(scorable_positions(seq, 2, true), (std::vector<std::size_t>{2, 3, 4}));
  const TokenSequence no_prompt{{5, 6, 7}, 0};
  EXPECT_EQ(scorable_positions(no_prompt, 2, false), (std::vector<std::size_t>{2}));
  try {
    scorable_positions(TokenSequence{{1, 2}, 2}, 2, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_scorable_tokens);
  }
}

TEST(Green, HalfOfVocabulary) {
  const WatermarkKey k{12345};
  std::size_t green = 0;
  for (TokenId t = 0; t < 1001; ++t) green += green_indicator(t, k, 1001);
  EXPECT_EQ(green, 501u);
}

TEST(Detect, NeedsADecisionRule) {
  const auto cfg = keyed_config(1, 2);
  const TokenSequence seq{{1, 2, 3, 4, 5}, 2};
  EXPECT_THROW(detect_ensemble(seq, cfg, 10, DetectOptions{}), Error);
  DetectOptions both;
  both.threshold = 100.0;
  both.fpr = 0.5;
  const auto r = detect_ensemble(seq, cfg, 10, both);
  EXPECT_NEAR(r.threshold, threshold_for_fpr(0.5, 2, 3, Aggregation::sum), 1e-15);
}

TEST(Detect, NullFalsePositiveRateIsBounded) {
  const std::size_t trials = 1500;
  for (std::size_t n : {1u, 4u}) {
    std::vector<double> s(trials);
    std::size_t hits_10 = 0, hits_1 = 0;
    for (std::size_t i = 0; i < trials; ++i) {
      const auto rec = generate_unwatermarked(kLm, 2, prompt_for(i), 120, prf::fold({77, i}));
      DetectOptions opts;
      opts.fpr = 0.1;
      const auto r = detect_ensemble(rec.sequence, keyed_config(1000 + i, n), kLm.vocab, opts);
      s[i] = r.s_ens;
      hits_10 += r.decision;
      hits_1 += r.p_ens <= 0.01;
    }
    const double fpr10 = static_cast<double>(hits_10) / trials;
    const double fpr1 = static_cast<double>(hits_1) / trials;
    EXPECT_LE(fpr10, 0.1 + 3 * stats::binomial_sigma(0.1, trials));
    EXPECT_LE(fpr1, 0.01 + 3 * stats::binomial_sigma(0.01, trials));
    // Null spread of the summed score is 0.5 sqrt(n / T).
    const double expected_sd = 0.5 * std::sqrt(static_cast<double>(n) / 120.0);
    EXPECT_NEAR(stats::stddev(s) / expected_sd, 1.0, 0.25);
    EXPECT_NEAR(stats::mean(s), 0.0, 4 * expected_sd / std::sqrt(static_cast<double>(trials)));
  }
}

TEST(Detect, WatermarkedTextIsDetected) {
  const auto cfg = keyed_config(5, 3);
  std::size_t detected = 0;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto rec = generate(kLm, cfg, prompt_for(i), 200, i);
    DetectOptions opts;
    opts.fpr = 1e-3;
    detected += detect_ensemble(rec.sequence, cfg, kLm.vocab, opts).decision;
  }
  EXPECT_GE(detected, 38u);
}

TEST(Detect, PowerGrowsWithAlpha) {
  double prev = -1.0;
  for (double alpha : {0.1, 0.3, 0.5}) {
    const auto cfg = keyed_config(9, 1, alpha);
    std::vector<double> s;
    for (std::uint64_t i = 0; i < 30; ++i) {
      const auto rec = generate(kLm, cfg, prompt_for(i), 150, i);
      s.push_back(score_sequence(rec.sequence, cfg.secret_keys[0], 2, kLm.vocab).score);
    }
    const double m = stats::mean(s);
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(Detect, WrongKeysSeeNoSignal) {
  const auto cfg = keyed_config(5, 3);
  const auto other = keyed_config(6, 3);
  std::vector<double> s;
  std::size_t detected = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto rec = generate(kLm, cfg, prompt_for(i), 200, i);
    DetectOptions opts;
    opts.fpr = 1e-3;
    const auto r = detect_ensemble(rec.sequence, other, kLm.vocab, opts);
    s.push_back(r.s_ens);
    detected += r.decision;
  }
  EXPECT_LE(detected, 2u);
  EXPECT_NEAR(stats::mean(s), 0.0, 4 * 0.5 * std::sqrt(3.0 / 200.0) / std::sqrt(200.0));
}

TEST(Detect, ZAggregationDecision) {
  const auto cfg = keyed_config(5, 2);
  const auto rec = generate(kLm, cfg, prompt_for(1), 200, 1);
  DetectOptions opts;
  opts.fpr = 1e-4;
  opts.aggregation = Aggregation::z_mean;
  const auto r = detect_ensemble(rec.sequence, cfg, kLm.vocab, opts);
  EXPECT_NEAR(r.z, r.s_ens / (0.5 * std::sqrt(2.0 / 200.0)), 1e-9);
  EXPECT_EQ(r.decision, r.z >= std::sqrt(2.0 * std::log(1e4)));
}

TEST(Detect, HighDetectionRateAtLength500) {
  const auto cfg = keyed_config(13, 5);
  std::size_t detected = 0;
  const std::size_t runs = 40;
  for (std::uint64_t i = 0; i < runs; ++i) {
    const auto rec = generate(kLm, cfg, prompt_for(100 + i), 500, 100 + i);
    DetectOptions opts;
    opts.fpr = 0.01;
    detected += detect_ensemble(rec.sequence, cfg, kLm.vocab, opts).decision;
  }
  EXPECT_GE(static_cast<double>(detected) / runs, 0.9);
}
