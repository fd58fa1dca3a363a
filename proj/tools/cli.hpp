#pragma once

// Subcommand implementations for the ensmark CLI. Each returns the process
// exit code and writes to the given streams, so tests drive them directly.
//
// Exit codes: 0 success (detect: watermark found in some record),
//             1 detect found no watermark / selftest failure,
//             2 configuration or input error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ensmark/analysis.hpp"
#include "ensmark/ensmark.hpp"
#include "ensmark/serialize.hpp"
#include "golden_vectors.hpp"

namespace ensmark::cli {

using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotDetected = 1;
inline constexpr int kExitError = 2;

/// Applies "a.b.c=value" to a JSON object. The value is parsed as JSON when
/// possible and kept as a string otherwise.
inline void apply_override(json& target, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::parse_error, "override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const std::exception&) {
    value = raw;
  }
  json* node = &target;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object()) throw Error(ErrorCode::parse_error, "override '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = io::parse_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

/// Opens `path` for writing, or returns std::cout for "" / "-".
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::invalid_argument, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream(std::ostream& fallback) { return file_.is_open() ? file_ : fallback; }

 private:
  std::ofstream file_;
};

// --- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string config_path;
  std::string output_path;
  std::vector<std::string> overrides;
  bool preseed_history = false;
};

inline GenerationRecord run_generation(const io::GenerateConfig& cfg) {
  const GenerateOptions opts{cfg.preseed_history};
  if (const auto* lm = std::get_if<SyntheticLM>(&cfg.lm))
    return generate(*lm, cfg.ensemble, cfg.prompt, cfg.length, cfg.seed, opts);
  const auto trace = io::read_trace_file(std::get<io::TraceSource>(cfg.lm).path);
  return generate(trace, cfg.ensemble, cfg.prompt, cfg.length, cfg.seed, opts);
}

inline int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto cfg = io::generate_config_from_json(load_config(args.config_path, args.overrides));
    if (args.preseed_history) cfg.preseed_history = true;
    const auto rec = run_generation(cfg);
    OutputSink sink(args.output_path);
    sink.stream(out) << io::record_to_json(rec, cfg).dump() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "generate: " << e.what() << '\n';
    return kExitError;
  }
}

// --- detect ---------------------------------------------------------------

struct DetectArgs {
  std::string config_path;
  std::string input_path;
  std::string output_path;
  std::vector<std::string> overrides;
  std::vector<std::string> keys;  // hex; replaces the config's secret keys
  std::optional<double> threshold;
  std::optional<double> fpr;
  std::optional<std::size_t> vocab_size;
  bool skip_repeats = false;
  std::string aggregation = "sum";
};

inline int cmd_detect(const DetectArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const json j = load_config(args.config_path, args.overrides);
    const bool full = j.contains("ensemble");
    EnsembleConfig cfg = io::ensemble_from_json(full ? j.at("ensemble") : j, full ? "ensemble." : "");
    if (!args.keys.empty()) {
      if (args.keys.size() != cfg.n())
        throw Error(ErrorCode::invalid_argument, std::to_string(args.keys.size()) + " keys given but n = " +
                                                     std::to_string(cfg.n()));
      cfg.secret_keys.clear();
      for (const auto& k : args.keys) cfg.secret_keys.push_back(SecretKey::from_hex(k));
      cfg.validate();
    }

    std::size_t vocab = 0;
    if (args.vocab_size) {
      vocab = *args.vocab_size;
    } else if (full && j.contains("lm")) {
      const auto lm = io::lm_from_json(j.at("lm"));
      vocab = std::holds_alternative<SyntheticLM>(lm)
                  ? std::get<SyntheticLM>(lm).vocab
                  : io::read_trace_file(std::get<io::TraceSource>(lm).path).vocab_size();
    } else {
      throw Error(ErrorCode::invalid_argument, "vocabulary size unknown: pass --vocab-size or an lm block");
    }

    DetectOptions opts;
    opts.skip_repeats = args.skip_repeats;
    if (args.aggregation == "sum") opts.aggregation = Aggregation::sum;
    else if (args.aggregation == "z" || args.aggregation == "z_mean") opts.aggregation = Aggregation::z_mean;
    else throw Error(ErrorCode::invalid_argument, "aggregation must be sum or z_mean");
    if (args.threshold) opts.threshold = args.threshold;
    else opts.fpr = args.fpr.value_or(0.01);

    std::ifstream in(args.input_path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open input '" + args.input_path + "'");
    std::vector<DetectionReport> reports;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::parse_error, "input line " + std::to_string(line_no) + ": " + e.what());
      }
      reports.push_back(detect_ensemble(io::record_from_json(rec).sequence, cfg, vocab, opts));
    }
    if (reports.empty()) throw Error(ErrorCode::invalid_argument, "input '" + args.input_path + "' has no records");

    OutputSink sink(args.output_path);
    bool any = false;
    for (const auto& r : reports) {
      sink.stream(out) << io::to_json(r).dump() << '\n';
      any = any || r.decision;
    }
    return any ? kExitOk : kExitNotDetected;
  } catch (const std::exception& e) {
    err << "detect: " << e.what() << '\n';
    return kExitError;
  }
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  double gamma = 0.5;
  double eps = 1.8;
  double length = 250.0;
  double c = 2.0;
  std::size_t n_max = 20;
  std::string output_path;
};

inline int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.n_max < 1) throw Error(ErrorCode::invalid_argument, "--n-max must be >= 1");
    const analysis::SizeAnalysisParams params{args.gamma, args.eps, args.length, args.c};
    const auto curve = analysis::p_bound_curve(params, args.n_max);
    OutputSink sink(args.output_path);
    std::ostream& os = sink.stream(out);
    os << "n,promoted_mass,mu,g,p_bound\n";
    for (const auto& pt : curve)
      os << pt.n << ',' << stats::format_double(pt.promoted_mass) << ',' << stats::format_double(pt.mu) << ','
         << stats::format_double(pt.g) << ',' << stats::format_exp(pt.log_bound, 10) << '\n';
    if (args.gamma * args.eps < 1.0)
      err << "n* = " << stats::format_double(analysis::optimal_n(args.gamma, args.eps))
          << ", integer argmax of g = " << analysis::argmax_g(args.gamma, args.eps, args.n_max) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << '\n';
    return kExitError;
  }
}

// --- experiment -----------------------------------------------------------

struct ExperimentArgs {
  std::string spec_path;
  std::string output_path;
  std::string trials_path;
  std::vector<std::string> overrides;
};

inline int cmd_experiment(const ExperimentArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto spec = io::experiment_from_json(load_config(args.spec_path, args.overrides));
    if (!args.trials_path.empty()) spec.record_trials = true;
    OutputSink sink(args.output_path);
    std::ostream& os = sink.stream(out);
    if (spec.kind == harness::ExperimentSpec::Kind::unbiasedness) {
      harness::write_csv(os, harness::run_unbiasedness_suite(spec));
      return kExitOk;
    }
    const auto result = spec.kind == harness::ExperimentSpec::Kind::power ? harness::run_power_sweep(spec)
                                                                           : harness::run_null_calibration(spec);
    harness::write_csv(os, result, spec.strategy);
    for (const auto& row : result.rows)
      if (!row.warning.empty()) err << "warning: cell " << row.cell << ": " << row.warning << '\n';
    if (spec.record_trials) {
      OutputSink trials(args.trials_path);
      harness::write_trials_jsonl(trials.stream(out), result);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "experiment: " << e.what() << '\n';
    return kExitError;
  }
}

// --- selftest -------------------------------------------------------------

inline int cmd_selftest(std::ostream& out, std::ostream& err) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    out << (ok ? "[PASS] " : "[FAIL] ") << name << '\n';
    if (!ok) ++failures;
  };
  try {
    for (std::size_t i = 0; i < golden::kFold.size(); ++i) {
      const auto& v = golden::kFold[i];
      check(prf::fold(std::span<const std::uint64_t>(v.words.data(), v.count)) == v.value,
            "splitmix64 fold vector " + std::to_string(i));
    }
    for (std::size_t i = 0; i < golden::kDerive.size(); ++i) {
      const auto& v = golden::kDerive[i];
      const auto key = prf_derive(SecretKey::from_hex(v.secret_key),
                                  std::span<const TokenId>(v.context.data(), v.context_len), v.member_index);
      check(key.seed == v.seed, "prf_derive vector " + std::to_string(i));
    }
    for (std::size_t i = 0; i < golden::kPermutation.size(); ++i) {
      const auto& v = golden::kPermutation[i];
      const auto perm = keyed_permutation(WatermarkKey{v.key}, v.vocab_size);
      bool same = true;
      for (std::size_t p = 0; p < v.vocab_size; ++p) same = same && perm[p] == v.order[p];
      bool tracked = true;
      for (std::size_t p = 0; p < v.vocab_size; ++p)
        tracked = tracked && keyed_position(WatermarkKey{v.key}, v.vocab_size, v.order[p]) == p;
      check(same && tracked, "keyed permutation vector " + std::to_string(i));
    }

    // Exact unbiasedness by enumeration over all permutation tuples (N = 4).
    const auto perms = all_permutations(4);
    prf::SplitMix64 rng(0x5E1F7E57);
    double worst = 0.0;
    for (double alpha : {0.3, 0.4, 0.5}) {
      for (std::size_t n : {1u, 2u}) {
        for (int d = 0; d < 5; ++d) {
          std::vector<double> w(4);
          for (double& x : w) x = -std::log(1.0 - rng.unit());
          const auto p = normalize(w);
          const auto e = exact_expectation(ReweightStrategy::dip(alpha), p, n, perms);
          for (std::size_t v = 0; v < 4; ++v) worst = std::max(worst, std::abs(e[v] - p[v]));
        }
      }
    }
    check(worst <= 1e-12, "exact ensemble unbiasedness (max deviation " + stats::format_double(worst) + ")");
    check(std::abs(analysis::optimal_n(0.5, 1.8) - 4.745) <= 0.01, "closed-form n* for gamma=0.5, eps=1.8");
  } catch (const std::exception& e) {
    err << "selftest: " << e.what() << '\n';
    return kExitError;
  }
  out << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
  return failures == 0 ? kExitOk : kExitNotDetected;
}

}  // namespace ensmark::cli
