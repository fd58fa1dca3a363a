#pragma once

// Experiment runner: null calibration, power sweeps over (alpha, n, T) with
// optional token attacks, and the unbiasedness suite.
//
// Seeds form a tree (master -> cell -> trial) built from the PRF, so every
// trial is a pure function of the spec and results are identical whatever
// the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ensmark/core.hpp"
#include "ensmark/detect.hpp"
#include "ensmark/generate.hpp"
#include "ensmark/keys.hpp"
#include "ensmark/lm.hpp"
#include "ensmark/parallel.hpp"
#include "ensmark/prf.hpp"
#include "ensmark/reweight.hpp"
#include "ensmark/stats.hpp"

namespace ensmark::harness {

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

struct AttackSpec {
  enum class Kind { none, random_replace, truncate };

  Kind kind = Kind::none;
  double rate = 0.0;           // random_replace
  double keep_fraction = 1.0;  // truncate
  std::uint64_t seed = 0;

  static AttackSpec none() { return {}; }
  static AttackSpec random_replace(double rate, std::uint64_t seed = 0) {
    return AttackSpec{Kind::random_replace, rate, 1.0, seed};
  }
  static AttackSpec truncate(double keep_fraction, std::uint64_t seed = 0) {
    return AttackSpec{Kind::truncate, 0.0, keep_fraction, seed};
  }

  void validate() const {
    if (kind == Kind::random_replace && !(rate >= 0.0 && rate <= 1.0))
      throw Error(ErrorCode::invalid_argument, "replacement rate must lie in [0,1]");
    if (kind == Kind::truncate && !(keep_fraction > 0.0 && keep_fraction <= 1.0))
      throw Error(ErrorCode::invalid_argument, "keep_fraction must lie in (0,1]");
  }

  std::string label() const {
    char buf[64];
    switch (kind) {
      case Kind::none: return "none";
      case Kind::random_replace: std::snprintf(buf, sizeof buf, "random_replace(%g)", rate); return buf;
      case Kind::truncate: std::snprintf(buf, sizeof buf, "truncate(%g)", keep_fraction); return buf;
    }
    return "unknown";
  }

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// Perturbs only the non-prompt region. random_replace swaps each token for
/// a uniform token id with probability `rate` (a replacement may coincide
/// with the original); truncate keeps the first ceil(keep_fraction * T).
inline TokenSequence apply_attack(const TokenSequence& seq, const AttackSpec& spec, std::size_t vocab_size) {
  spec.validate();
  TokenSequence out = seq;
  const std::size_t generated = seq.generated_len();
  switch (spec.kind) {
    case AttackSpec::Kind::none:
      break;
    case AttackSpec::Kind::random_replace:
      require_vocab(vocab_size);
      for (std::size_t i = 0; i < generated; ++i) {
        const std::uint64_t draw = prf::fold({prf::domain::kAttack, spec.seed, i, 0});
        if (prf::to_unit(draw) < spec.rate) {
          prf::SplitMix64 pick(prf::fold({prf::domain::kAttack, spec.seed, i, 1}));
          out.tokens[seq.prompt_len + i] = static_cast<TokenId>(pick.below(vocab_size));
        }
      }
      break;
    case AttackSpec::Kind::truncate: {
      const auto keep = static_cast<std::size_t>(std::ceil(spec.keep_fraction * static_cast<double>(generated)));
      out.tokens.resize(seq.prompt_len + std::min(keep, generated));
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Specs and results
// ---------------------------------------------------------------------------

/// Low-entropy synthetic LM (about 1.7 nats per step at N = 1000), the
/// regime where next-token distributions look like those of real LMs.
inline SyntheticLM default_lm() { return SyntheticLM{0x5EED, 1000, 512.0}; }

struct ExperimentSpec {
  enum class Kind { power, null_calibration, unbiasedness };

  Kind kind = Kind::power;
  SyntheticLM lm = default_lm();
  StrategyKind strategy = StrategyKind::dip;
  std::vector<double> alphas{0.3};
  std::vector<std::size_t> ns{1, 5};
  std::vector<std::size_t> lengths{250};
  std::size_t trials = 1000;
  std::size_t null_trials = 0;  // power only: empirical calibration per cell
  AttackSpec attack;
  std::vector<double> fpr_targets{1e-3, 1e-4, 1e-5};
  std::uint64_t master_seed = 1;
  std::size_t context_window = kDefaultContextWindow;
  bool skip_repeats = false;
  bool record_trials = false;

  void validate() const {
    lm.validate();
    attack.validate();
    if (trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be >= 1");
    if (context_window < 1) throw Error(ErrorCode::invalid_argument, "context window must be >= 1");
    for (double q : fpr_targets)
      if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::invalid_argument, "FPR targets must lie in (0,1)");
    for (double a : alphas) (strategy == StrategyKind::gamma ? ReweightStrategy::gamma() : ReweightStrategy::dip(a)).validate();
    for (std::size_t n : ns)
      if (n < 1) throw Error(ErrorCode::invalid_argument, "ensemble size must be >= 1");
    for (std::size_t t : lengths)
      if (t < 1) throw Error(ErrorCode::invalid_argument, "generation length must be >= 1");
  }
};

inline std::string_view to_string(ExperimentSpec::Kind k) {
  switch (k) {
    case ExperimentSpec::Kind::power: return "power";
    case ExperimentSpec::Kind::null_calibration: return "null";
    case ExperimentSpec::Kind::unbiasedness: return "unbiasedness";
  }
  return "unknown";
}

struct TrialRecord {
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::string attack;
  bool watermarked = true;
  double s_ens = 0.0;
  double z = 0.0;
  double log_p_ens = 0.0;
  std::size_t scored_tokens = 0;
  double watermarked_fraction = 0.0;
};

struct CellResult {
  std::size_t cell = 0;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t length = 0;
  std::string attack = "none";
  std::size_t trials = 0;
  /// Power: TPR at the analytic Hoeffding threshold. Null: empirical FPR.
  std::vector<double> rate_at_fpr;
  /// Power with null_trials: null FPR of the analytic threshold, and TPR at
  /// the empirical null quantile.
  std::vector<double> null_fpr_at_analytic;
  std::vector<double> tpr_at_empirical;
  double median_log_p = 0.0;
  double mean_s_ens = 0.0;
  double sd_s_ens = 0.0;
  double mean_z = 0.0;
  double watermarked_fraction = 0.0;
  double ks_d_plus = 0.0;  // null only
  std::string warning;
};

struct ExperimentResult {
  ExperimentSpec::Kind kind = ExperimentSpec::Kind::power;
  std::vector<double> fpr_targets;
  std::vector<CellResult> rows;
  std::vector<TrialRecord> trials;

  /// Row for (alpha, n, T, attack label); nullptr if absent.
  const CellResult* find(double alpha, std::size_t n, std::size_t length, std::string_view attack = "none") const {
    for (const auto& r : rows)
      if (r.alpha == alpha && r.n == n && r.length == length && r.attack == attack) return &r;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Seed tree
// ---------------------------------------------------------------------------

namespace seeds {
inline constexpr std::uint64_t kCell = 1, kTrial = 2, kNullTrial = 3, kKey = 4, kPrompt = 5, kSampling = 6,
                               kAttack = 7, kExact = 8;

inline std::uint64_t cell(std::uint64_t master, std::size_t index) {
  return prf::fold({prf::domain::kExperiment, master, kCell, index});
}
inline std::uint64_t child(std::uint64_t parent, std::uint64_t tag, std::uint64_t index) {
  return prf::fold({prf::domain::kExperiment, parent, tag, index});
}
}  // namespace seeds

inline SecretKey derive_secret_key(std::uint64_t seed, std::size_t index) {
  SecretKey::Bytes bytes{};
  for (std::uint64_t half = 0; half < 2; ++half) {
    const std::uint64_t w = prf::fold({prf::domain::kExperiment, seed, seeds::kKey, index, half});
    for (std::size_t i = 0; i < 8; ++i) bytes[8 * half + i] = static_cast<std::uint8_t>(w >> (8 * i));
  }
  return SecretKey(bytes);
}

inline std::vector<SecretKey> derive_secret_keys(std::uint64_t seed, std::size_t n) {
  std::vector<SecretKey> keys;
  keys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) keys.push_back(derive_secret_key(seed, i));
  return keys;
}

inline std::vector<TokenId> random_prompt(std::uint64_t seed, std::size_t length, std::size_t vocab_size) {
  prf::SplitMix64 rng(seeds::child(seed, seeds::kPrompt, 0));
  std::vector<TokenId> prompt(length);
  for (auto& t : prompt) t = static_cast<TokenId>(rng.below(vocab_size));
  return prompt;
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

namespace detail {

struct Cell {
  std::size_t index;
  double alpha;
  std::size_t n;
  std::size_t length;
};

inline std::vector<Cell> grid(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (double a : spec.alphas)
    for (std::size_t n : spec.ns)
      for (std::size_t t : spec.lengths) cells.push_back(Cell{cells.size(), a, n, t});
  return cells;
}

inline EnsembleConfig cell_config(const ExperimentSpec& spec, const Cell& cell, std::uint64_t cell_seed) {
  EnsembleConfig cfg;
  cfg.strategy = spec.strategy == StrategyKind::gamma ? ReweightStrategy::gamma() : ReweightStrategy::dip(cell.alpha);
  cfg.secret_keys = derive_secret_keys(cell_seed, cell.n);
  cfg.context_window = spec.context_window;
  return cfg;
}

inline TrialRecord make_trial(const Cell& cell, std::size_t trial, std::string attack, bool watermarked,
                              const DetectionReport& rep, double wm_fraction) {
  TrialRecord r;
  r.cell = cell.index;
  r.trial = trial;
  r.attack = std::move(attack);
  r.watermarked = watermarked;
  r.s_ens = rep.s_ens;
  r.z = rep.z;
  r.log_p_ens = rep.log_p_ens;
  r.scored_tokens = rep.per_key.front().scored_tokens;
  r.watermarked_fraction = wm_fraction;
  return r;
}

inline double fraction_true(const std::vector<bool>& mask) {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), true)) / static_cast<double>(mask.size());
}

inline void summarize(CellResult& row, const std::vector<TrialRecord>& trials, std::span<const double> fprs) {
  std::vector<double> log_p, s, z, wm;
  for (const auto& t : trials) {
    log_p.push_back(t.log_p_ens);
    s.push_back(t.s_ens);
    z.push_back(t.z);
    wm.push_back(t.watermarked_fraction);
  }
  row.trials = trials.size();
  row.median_log_p = stats::median(log_p);
  row.mean_s_ens = stats::mean(s);
  row.sd_s_ens = stats::stddev(s);
  row.mean_z = stats::mean(z);
  row.watermarked_fraction = stats::mean(wm);
  row.rate_at_fpr.clear();
  for (double q : fprs) {
    const double cut = std::log(q);
    const auto hits = std::count_if(log_p.begin(), log_p.end(), [&](double lp) { return lp <= cut; });
    row.rate_at_fpr.push_back(static_cast<double>(hits) / static_cast<double>(log_p.size()));
  }
}

inline DetectOptions detect_options(const ExperimentSpec& spec) {
  DetectOptions opts;
  opts.threshold = 0.0;  // decisions are recomputed per FPR target from log p
  opts.skip_repeats = spec.skip_repeats;
  return opts;
}

}  // namespace detail

inline ExperimentResult run_power_sweep(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = ExperimentSpec::Kind::power;
  result.fpr_targets = spec.fpr_targets;
  const std::size_t vocab = spec.lm.vocab_size();
  const DetectOptions opts = detail::detect_options(spec);
  const bool attacked = spec.attack.kind != AttackSpec::Kind::none;
  const std::string attack_label = spec.attack.label();

  for (const auto& cell : detail::grid(spec)) {
    const std::uint64_t cell_seed = seeds::cell(spec.master_seed, cell.index);
    const EnsembleConfig cfg = detail::cell_config(spec, cell, cell_seed);

    std::vector<TrialRecord> clean(spec.trials), hit(attacked ? spec.trials : 0);
    parallel_for(spec.trials, [&](std::size_t trial) {
      const std::uint64_t ts = seeds::child(cell_seed, seeds::kTrial, trial);
      const auto prompt = random_prompt(ts, spec.context_window, vocab);
      const auto rec = generate(spec.lm, cfg, prompt, cell.length, seeds::child(ts, seeds::kSampling, 0));
      const double wm = detail::fraction_true(rec.watermarked_mask);
      clean[trial] = detail::make_trial(cell, trial, "none", true,
                                        detect_ensemble(rec.sequence, cfg, vocab, opts), wm);
      if (attacked) {
        AttackSpec a = spec.attack;
        a.seed = prf::fold({prf::domain::kAttack, spec.attack.seed, ts});
        const auto perturbed = apply_attack(rec.sequence, a, vocab);
        hit[trial] = detail::make_trial(cell, trial, attack_label, true,
                                        detect_ensemble(perturbed, cfg, vocab, opts), wm);
      }
    });

    std::vector<TrialRecord> null(spec.null_trials);
    parallel_for(spec.null_trials, [&](std::size_t trial) {
      const std::uint64_t ts = seeds::child(cell_seed, seeds::kNullTrial, trial);
      const auto prompt = random_prompt(ts, spec.context_window, vocab);
      const auto rec = generate_unwatermarked(spec.lm, spec.context_window, prompt, cell.length,
                                              seeds::child(ts, seeds::kSampling, 0));
      null[trial] = detail::make_trial(cell, trial, "null", false,
                                       detect_ensemble(rec.sequence, cfg, vocab, opts), 0.0);
    });

    auto add_row = [&](const std::vector<TrialRecord>& trials, const std::string& label) {
      CellResult row;
      row.cell = cell.index;
      row.alpha = cell.alpha;
      row.n = cell.n;
      row.length = cell.length;
      row.attack = label;
      detail::summarize(row, trials, spec.fpr_targets);
      if (!null.empty()) {
        std::vector<double> null_s, null_lp;
        for (const auto& t : null) {
          null_s.push_back(t.s_ens);
          null_lp.push_back(t.log_p_ens);
        }
        std::sort(null_s.begin(), null_s.end(), std::greater<>());
        for (double q : spec.fpr_targets) {
          const double cut = std::log(q);
          const auto fp = std::count_if(null_lp.begin(), null_lp.end(), [&](double lp) { return lp <= cut; });
          row.null_fpr_at_analytic.push_back(static_cast<double>(fp) / static_cast<double>(null.size()));
          // At most floor(q M) null scores may strictly exceed the threshold.
          const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(null_s.size())));
          const double tau = k < null_s.size() ? null_s[k] : -std::numeric_limits<double>::infinity();
          const auto tp = std::count_if(trials.begin(), trials.end(), [&](const TrialRecord& t) { return t.s_ens > tau; });
          row.tpr_at_empirical.push_back(static_cast<double>(tp) / static_cast<double>(trials.size()));
        }
      }
      result.rows.push_back(std::move(row));
    };
    add_row(clean, "none");
    if (attacked) add_row(hit, attack_label);

    if (spec.record_trials) {
      result.trials.insert(result.trials.end(), clean.begin(), clean.end());
      result.trials.insert(result.trials.end(), hit.begin(), hit.end());
      result.trials.insert(result.trials.end(), null.begin(), null.end());
    }
  }
  return result;
}

inline ExperimentResult run_null_calibration(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = ExperimentSpec::Kind::null_calibration;
  result.fpr_targets = spec.fpr_targets;
  const std::size_t vocab = spec.lm.vocab_size();
  const DetectOptions opts = detail::detect_options(spec);
  const double q_min =
      spec.fpr_targets.empty() ? 1.0 : *std::min_element(spec.fpr_targets.begin(), spec.fpr_targets.end());

  for (const auto& cell : detail::grid(spec)) {
    const std::uint64_t cell_seed = seeds::cell(spec.master_seed, cell.index);
    const EnsembleConfig cfg = detail::cell_config(spec, cell, cell_seed);
    std::vector<TrialRecord> trials(spec.trials);
    parallel_for(spec.trials, [&](std::size_t trial) {
      const std::uint64_t ts = seeds::child(cell_seed, seeds::kNullTrial, trial);
      const auto prompt = random_prompt(ts, spec.context_window, vocab);
      const auto rec = generate_unwatermarked(spec.lm, spec.context_window, prompt, cell.length,
                                              seeds::child(ts, seeds::kSampling, 0));
      trials[trial] = detail::make_trial(cell, trial, "null", false,
                                         detect_ensemble(rec.sequence, cfg, vocab, opts), 0.0);
    });

    CellResult row;
    row.cell = cell.index;
    row.alpha = cell.alpha;
    row.n = cell.n;
    row.length = cell.length;
    row.attack = "none";
    detail::summarize(row, trials, spec.fpr_targets);
    std::vector<double> p;
    for (const auto& t : trials) p.push_back(std::exp(t.log_p_ens));
    row.ks_d_plus = stats::ks_d_plus_uniform(std::move(p));
    if (static_cast<double>(spec.trials) < 100.0 / q_min)
      row.warning = "insufficient trials for FPR " + stats::format_double(q_min) + " (need >= " +
                    std::to_string(static_cast<std::size_t>(std::ceil(100.0 / q_min))) + ")";
    result.rows.push_back(std::move(row));
    if (spec.record_trials) result.trials.insert(result.trials.end(), trials.begin(), trials.end());
  }
  return result;
}

struct UnbiasednessReport {
  std::size_t exact_cases = 0;
  double exact_max_deviation = 0.0;
  double point_mass_max_deviation = 0.0;
  std::size_t runs = 0;
  stats::ChiSquare watermarked;
  stats::ChiSquare unwatermarked;
};

/// Exact branch: enumeration over all permutation tuples for N = 4.
/// Monte-Carlo branch: first generated token with fresh secret keys per run
/// versus the LM's exact next-token distribution.
inline UnbiasednessReport run_unbiasedness_suite(const ExperimentSpec& spec, std::size_t exact_vocab = 4,
                                                 std::size_t exact_distributions = 100) {
  spec.validate();
  UnbiasednessReport rep;

  const auto perms = all_permutations(exact_vocab);
  std::vector<std::size_t> exact_ns;
  for (std::size_t n : spec.ns)
    if (n <= 2) exact_ns.push_back(n);
  if (exact_ns.empty()) exact_ns = {1, 2};

  prf::SplitMix64 rng(seeds::child(spec.master_seed, seeds::kExact, 0));
  std::vector<TokenDistribution> inputs;
  for (std::size_t d = 0; d < exact_distributions; ++d) {
    std::vector<double> w(exact_vocab);
    for (double& x : w) x = -std::log(1.0 - rng.unit());  // uniform on the simplex
    inputs.push_back(normalize(w));
  }
  for (double alpha : spec.alphas) {
    const auto strategy = spec.strategy == StrategyKind::gamma ? ReweightStrategy::gamma() : ReweightStrategy::dip(alpha);
    for (std::size_t n : exact_ns) {
      for (const auto& p : inputs) {
        const auto e = exact_expectation(strategy, p, n, perms);
        for (std::size_t v = 0; v < exact_vocab; ++v)
          rep.exact_max_deviation = std::max(rep.exact_max_deviation, std::abs(e[v] - p[v]));
        ++rep.exact_cases;
      }
      for (TokenId t = 0; t < exact_vocab; ++t) {
        const auto p = TokenDistribution::point_mass(exact_vocab, t);
        const auto e = exact_expectation(strategy, p, n, perms);
        for (std::size_t v = 0; v < exact_vocab; ++v)
          rep.point_mass_max_deviation = std::max(rep.point_mass_max_deviation, std::abs(e[v] - p[v]));
      }
    }
  }

  const std::size_t vocab = spec.lm.vocab_size();
  const std::size_t n = spec.ns.empty() ? 1 : *std::max_element(spec.ns.begin(), spec.ns.end());
  const double alpha = spec.alphas.empty() ? 0.3 : spec.alphas.front();
  const auto prompt = random_prompt(spec.master_seed, spec.context_window, vocab);
  const auto expected = spec.lm.next(std::span<const TokenId>(prompt).last(spec.context_window), 0);

  rep.runs = spec.trials;
  std::vector<TokenId> wm_first(spec.trials), plain_first(spec.trials);
  parallel_for(spec.trials, [&](std::size_t run) {
    const std::uint64_t rs = seeds::child(spec.master_seed, seeds::kTrial, run);
    EnsembleConfig cfg;
    cfg.strategy = spec.strategy == StrategyKind::gamma ? ReweightStrategy::gamma() : ReweightStrategy::dip(alpha);
    cfg.secret_keys = derive_secret_keys(rs, n);
    cfg.context_window = spec.context_window;
    const std::uint64_t sampling = seeds::child(rs, seeds::kSampling, 0);
    wm_first[run] = generate(spec.lm, cfg, prompt, 1, sampling).sequence.tokens.back();
    plain_first[run] = generate_unwatermarked(spec.lm, spec.context_window, prompt, 1, sampling).sequence.tokens.back();
  });
  std::vector<std::size_t> wm_counts(vocab, 0), plain_counts(vocab, 0);
  for (TokenId t : wm_first) ++wm_counts[t];
  for (TokenId t : plain_first) ++plain_counts[t];
  rep.watermarked = stats::chi_square_gof(wm_counts, expected.probs());
  rep.unwatermarked = stats::chi_square_gof(plain_counts, expected.probs());
  return rep;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fpr_label(double q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}
}  // namespace detail

/// Power columns: kind,strategy,alpha,n,T,attack,trials,tpr@<q>...,median_p,
///   log10_median_p,mean_s_ens,sd_s_ens,mean_z,watermarked_fraction
///   [,null_fpr@<q>...,tpr_empirical@<q>...]   (when null_trials > 0)
/// Null columns: kind,strategy,alpha,n,T,attack,trials,fpr@<q>...,median_p,
///   log10_median_p,mean_s_ens,sd_s_ens,mean_z,ks_d_plus,warning
inline void write_csv(std::ostream& os, const ExperimentResult& r, StrategyKind strategy = StrategyKind::dip) {
  using stats::format_double;
  const bool power = r.kind == ExperimentSpec::Kind::power;
  const bool empirical = power && !r.rows.empty() && !r.rows.front().null_fpr_at_analytic.empty();
  os << "kind,strategy,alpha,n,T,attack,trials";
  for (double q : r.fpr_targets) os << (power ? ",tpr@" : ",fpr@") << detail::fpr_label(q);
  os << ",median_p,log10_median_p,mean_s_ens,sd_s_ens,mean_z";
  if (power) {
    os << ",watermarked_fraction";
    if (empirical) {
      for (double q : r.fpr_targets) os << ",null_fpr@" << detail::fpr_label(q);
      for (double q : r.fpr_targets) os << ",tpr_empirical@" << detail::fpr_label(q);
    }
  } else {
    os << ",ks_d_plus,warning";
  }
  os << '\n';
  for (const auto& row : r.rows) {
    os << to_string(r.kind) << ',' << to_string(strategy) << ',' << format_double(row.alpha) << ',' << row.n
       << ',' << row.length << ',' << row.attack << ',' << row.trials;
    for (double v : row.rate_at_fpr) os << ',' << format_double(v);
    os << ',' << stats::format_exp(row.median_log_p) << ',' << format_double(row.median_log_p / std::log(10.0))
       << ',' << format_double(row.mean_s_ens) << ',' << format_double(row.sd_s_ens) << ','
       << format_double(row.mean_z);
    if (power) {
      os << ',' << format_double(row.watermarked_fraction);
      if (empirical) {
        for (double v : row.null_fpr_at_analytic) os << ',' << format_double(v);
        for (double v : row.tpr_at_empirical) os << ',' << format_double(v);
      }
    } else {
      os << ',' << format_double(row.ks_d_plus) << ',' << row.warning;
    }
    os << '\n';
  }
}

inline void write_trials_jsonl(std::ostream& os, const ExperimentResult& r) {
  using stats::format_double;
  for (const auto& t : r.trials) {
    os << "{\"cell\":" << t.cell << ",\"trial\":" << t.trial << ",\"attack\":\"" << t.attack
       << "\",\"watermarked\":" << (t.watermarked ? "true" : "false") << ",\"s_ens\":" << format_double(t.s_ens)
       << ",\"z\":" << format_double(t.z) << ",\"log_p_ens\":" << format_double(t.log_p_ens)
       << ",\"scored_tokens\":" << t.scored_tokens
       << ",\"watermarked_fraction\":" << format_double(t.watermarked_fraction) << "}\n";
  }
}

/// Columns: check,statistic,dof,p_value
inline void write_csv(std::ostream& os, const UnbiasednessReport& r) {
  using stats::format_double;
  os << "check,statistic,dof,p_value\n";
  os << "exact_max_deviation," << format_double(r.exact_max_deviation) << ",0,\n";
  os << "point_mass_max_deviation," << format_double(r.point_mass_max_deviation) << ",0,\n";
  os << "first_token_chi2_watermarked," << format_double(r.watermarked.statistic) << ',' << r.watermarked.dof << ','
     << format_double(r.watermarked.p_value) << '\n';
  os << "first_token_chi2_unwatermarked," << format_double(r.unwatermarked.statistic) << ','
     << r.unwatermarked.dof << ',' << format_double(r.unwatermarked.p_value) << '\n';
}

}  // namespace ensmark::harness
