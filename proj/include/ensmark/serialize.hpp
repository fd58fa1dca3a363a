#pragma once

// JSON / JSONL formats.
//
//   ensemble block   {"strategy":"dip","alpha":0.3,"n":5,"secret_keys":[hex...],"context_window":2}
//   lm block         {"kind":"synthetic","seed":1,"vocab_size":1000,"beta":4}
//                    {"kind":"trace","path":"steps.jsonl"}
//   generate config  {"lm":{...},"ensemble":{...},"prompt":[...],"T":10,"seed":7,"preseed_history":false}
//   record (JSONL)   {"tokens":[...],"prompt_len":2,"mask":[...],"config":{generate config},
//                     "seeds":{"rng_seed":7,"lm_seed":1}}
//   trace (JSONL)    {"probs":[...]}
//
// Parse failures throw Error(parse_error) naming the offending field.

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "ensmark/core.hpp"
#include "ensmark/detect.hpp"
#include "ensmark/generate.hpp"
#include "ensmark/harness.hpp"
#include "ensmark/lm.hpp"
#include "ensmark/reweight.hpp"

namespace ensmark::io {

using nlohmann::json;

namespace detail {

inline const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, where + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::parse_error, "missing field '" + where + name + "'");
  return *it;
}

template <class T>
T get(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw Error(ErrorCode::parse_error, "");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorCode::parse_error, "field '" + where + name + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* name, const std::string& where, T fallback) {
  if (!j.is_object() || !j.contains(name)) return fallback;
  return get<T>(j, name, where);
}

}  // namespace detail

// --- ensemble -------------------------------------------------------------

inline json to_json(const EnsembleConfig& cfg) {
  json keys = json::array();
  for (const auto& k : cfg.secret_keys) keys.push_back(k.to_hex());
  return json{{"strategy", std::string(to_string(cfg.strategy.kind))},
              {"alpha", cfg.strategy.alpha},
              {"n", cfg.n()},
              {"secret_keys", keys},
              {"context_window", cfg.context_window}};
}

inline EnsembleConfig ensemble_from_json(const json& j, const std::string& where = "ensemble.") {
  using detail::get;
  EnsembleConfig cfg;
  const auto name = detail::get_or<std::string>(j, "strategy", where, "dip");
  if (name == "dip") {
    cfg.strategy = ReweightStrategy{StrategyKind::dip, get<double>(j, "alpha", where)};
  } else if (name == "gamma") {
    cfg.strategy = ReweightStrategy::gamma();
  } else {
    throw Error(ErrorCode::parse_error, "field '" + where + "strategy' must be \"dip\" or \"gamma\"");
  }
  try {
    cfg.strategy.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, "field '" + where + "alpha': " + e.what());
  }
  const json& keys = detail::field(j, "secret_keys", where);
  if (!keys.is_array() || keys.empty())
    throw Error(ErrorCode::parse_error, "field '" + where + "secret_keys' must be a non-empty array");
  for (const auto& k : keys) {
    if (!k.is_string()) throw Error(ErrorCode::parse_error, "field '" + where + "secret_keys' must hold hex strings");
    try {
      cfg.secret_keys.push_back(SecretKey::from_hex(k.get<std::string>()));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, "field '" + where + "secret_keys': " + e.what());
    }
  }
  const auto n = get<std::size_t>(j, "n", where);
  if (n != cfg.secret_keys.size())
    throw Error(ErrorCode::parse_error, "field '" + where + "n' is " + std::to_string(n) + " but " +
                                            std::to_string(cfg.secret_keys.size()) + " secret keys were given");
  cfg.context_window = detail::get_or<std::size_t>(j, "context_window", where, kDefaultContextWindow);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, "field '" + where + "secret_keys': " + e.what());
  }
  return cfg;
}

// --- language models ------------------------------------------------------

struct TraceSource {
  std::string path;
  friend bool operator==(const TraceSource&, const TraceSource&) = default;
};

using LmSpec = std::variant<SyntheticLM, TraceSource>;

inline json to_json(const SyntheticLM& lm) {
  return json{{"kind", "synthetic"}, {"seed", lm.seed}, {"vocab_size", lm.vocab}, {"beta", lm.beta}};
}

inline json to_json(const LmSpec& lm) {
  if (const auto* s = std::get_if<SyntheticLM>(&lm)) return to_json(*s);
  return json{{"kind", "trace"}, {"path", std::get<TraceSource>(lm).path}};
}

inline SyntheticLM synthetic_from_json(const json& j, const std::string& where = "lm.") {
  const SyntheticLM defaults = harness::default_lm();
  SyntheticLM lm;
  lm.seed = detail::get_or<std::uint64_t>(j, "seed", where, defaults.seed);
  lm.vocab = detail::get_or<std::size_t>(j, "vocab_size", where, defaults.vocab);
  lm.beta = detail::get_or<double>(j, "beta", where, defaults.beta);
  try {
    lm.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, "field '" + where + "': " + e.what());
  }
  return lm;
}

inline LmSpec lm_from_json(const json& j, const std::string& where = "lm.") {
  const auto kind = detail::get_or<std::string>(j, "kind", where, "synthetic");
  if (kind == "synthetic") return synthetic_from_json(j, where);
  if (kind == "trace") return TraceSource{detail::get<std::string>(j, "path", where)};
  throw Error(ErrorCode::parse_error, "field '" + where + "kind' must be \"synthetic\" or \"trace\"");
}

/// One {"probs":[...]} object per line; blank lines are skipped.
inline DistributionTrace read_trace(std::istream& in) {
  std::vector<TokenDistribution> steps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "trace line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::parse_error, where + e.what());
    }
    try {
      steps.push_back(TokenDistribution::from_probs(detail::get<std::vector<double>>(j, "probs", where)));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, where + e.what());
    }
  }
  if (steps.empty()) throw Error(ErrorCode::parse_error, "trace is empty");
  return DistributionTrace(std::move(steps));
}

inline DistributionTrace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open trace file '" + path + "'");
  return read_trace(in);
}

// --- generation -----------------------------------------------------------

struct GenerateConfig {
  LmSpec lm = harness::default_lm();
  EnsembleConfig ensemble;
  std::vector<TokenId> prompt;
  std::size_t length = 0;  // T
  std::uint64_t seed = 0;
  bool preseed_history = false;

  friend bool operator==(const GenerateConfig&, const GenerateConfig&) = default;
};

inline json to_json(const GenerateConfig& c) {
  return json{{"lm", to_json(c.lm)},   {"ensemble", to_json(c.ensemble)}, {"prompt", c.prompt},
              {"T", c.length},         {"seed", c.seed},                  {"preseed_history", c.preseed_history}};
}

inline GenerateConfig generate_config_from_json(const json& j) {
  GenerateConfig c;
  c.lm = j.contains("lm") ? lm_from_json(j.at("lm")) : LmSpec{harness::default_lm()};
  c.ensemble = ensemble_from_json(detail::field(j, "ensemble", ""));
  c.prompt = detail::get<std::vector<TokenId>>(j, "prompt", "");
  c.length = detail::get<std::size_t>(j, "T", "");
  if (c.length == 0) throw Error(ErrorCode::parse_error, "field 'T' must be >= 1");
  c.seed = detail::get<std::uint64_t>(j, "seed", "");
  c.preseed_history = detail::get_or<bool>(j, "preseed_history", "", false);
  return c;
}

inline json record_to_json(const GenerationRecord& rec, const GenerateConfig& cfg) {
  json mask = json::array();
  for (bool b : rec.watermarked_mask) mask.push_back(b);
  json seeds{{"rng_seed", rec.rng_seed}};
  if (const auto* s = std::get_if<SyntheticLM>(&cfg.lm)) seeds["lm_seed"] = s->seed;
  return json{{"tokens", rec.sequence.tokens},
              {"prompt_len", rec.sequence.prompt_len},
              {"mask", mask},
              {"config", to_json(cfg)},
              {"seeds", seeds}};
}

struct ParsedRecord {
  TokenSequence sequence;
  std::vector<bool> mask;
  std::optional<GenerateConfig> config;
};

inline ParsedRecord record_from_json(const json& j) {
  ParsedRecord r;
  r.sequence.tokens = detail::get<std::vector<TokenId>>(j, "tokens", "");
  r.sequence.prompt_len = detail::get_or<std::size_t>(j, "prompt_len", "", 0);
  if (r.sequence.prompt_len > r.sequence.tokens.size())
    throw Error(ErrorCode::parse_error, "field 'prompt_len' exceeds the token count");
  r.mask = detail::get_or<std::vector<bool>>(j, "mask", "", {});
  if (j.contains("config")) r.config = generate_config_from_json(j.at("config"));
  return r;
}

// --- detection ------------------------------------------------------------

inline json to_json(const DetectionReport& r) {
  json per_key = json::array();
  for (const auto& s : r.per_key)
    per_key.push_back({{"green_count", s.green_count}, {"scored_tokens", s.scored_tokens}, {"score", s.score}});
  return json{{"per_key", per_key},
              {"s_ens", r.s_ens},
              {"z", r.z},
              {"p_single_best", r.p_single_best},
              {"p_ens", r.p_ens},
              {"log_p_ens", r.log_p_ens},
              {"threshold", r.threshold},
              {"decision", r.decision},
              {"aggregation", std::string(to_string(r.aggregation))}};
}

// --- experiments ----------------------------------------------------------

inline harness::AttackSpec attack_from_json(const json& j) {
  using harness::AttackSpec;
  const std::string where = "attack.";
  const auto kind = detail::get_or<std::string>(j, "kind", where, "none");
  AttackSpec a;
  a.seed = detail::get_or<std::uint64_t>(j, "seed", where, 0);
  if (kind == "none") {
    a.kind = AttackSpec::Kind::none;
  } else if (kind == "random_replace") {
    a.kind = AttackSpec::Kind::random_replace;
    a.rate = detail::get<double>(j, "rate", where);
  } else if (kind == "truncate") {
    a.kind = AttackSpec::Kind::truncate;
    a.keep_fraction = detail::get<double>(j, "keep_fraction", where);
  } else {
    throw Error(ErrorCode::parse_error, "field 'attack.kind' must be none, random_replace or truncate");
  }
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, "field 'attack': " + std::string(e.what()));
  }
  return a;
}

inline json to_json(const harness::AttackSpec& a) {
  using harness::AttackSpec;
  switch (a.kind) {
    case AttackSpec::Kind::none: return json{{"kind", "none"}};
    case AttackSpec::Kind::random_replace: return json{{"kind", "random_replace"}, {"rate", a.rate}, {"seed", a.seed}};
    case AttackSpec::Kind::truncate:
      return json{{"kind", "truncate"}, {"keep_fraction", a.keep_fraction}, {"seed", a.seed}};
  }
  return json{};
}

inline harness::ExperimentSpec experiment_from_json(const json& j) {
  using harness::ExperimentSpec;
  ExperimentSpec s;
  const auto kind = detail::get_or<std::string>(j, "kind", "", "power");
  if (kind == "power") s.kind = ExperimentSpec::Kind::power;
  else if (kind == "null") s.kind = ExperimentSpec::Kind::null_calibration;
  else if (kind == "unbiasedness") s.kind = ExperimentSpec::Kind::unbiasedness;
  else throw Error(ErrorCode::parse_error, "field 'kind' must be power, null or unbiasedness");

  if (j.contains("lm")) s.lm = synthetic_from_json(j.at("lm"));
  const auto strategy = detail::get_or<std::string>(j, "strategy", "", "dip");
  if (strategy == "gamma") s.strategy = StrategyKind::gamma;
  else if (strategy != "dip") throw Error(ErrorCode::parse_error, "field 'strategy' must be \"dip\" or \"gamma\"");
  s.alphas = detail::get_or<std::vector<double>>(j, "alpha", "", s.alphas);
  s.ns = detail::get_or<std::vector<std::size_t>>(j, "n", "", s.ns);
  s.lengths = detail::get_or<std::vector<std::size_t>>(j, "T", "", s.lengths);
  s.trials = detail::get_or<std::size_t>(j, "trials", "", s.trials);
  s.null_trials = detail::get_or<std::size_t>(j, "null_trials", "", s.null_trials);
  if (j.contains("attack")) s.attack = attack_from_json(j.at("attack"));
  s.fpr_targets = detail::get_or<std::vector<double>>(j, "fpr_targets", "", s.fpr_targets);
  s.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", "", s.master_seed);
  s.context_window = detail::get_or<std::size_t>(j, "context_window", "", s.context_window);
  s.skip_repeats = detail::get_or<bool>(j, "skip_repeats", "", s.skip_repeats);
  s.record_trials = detail::get_or<bool>(j, "record_trials", "", s.record_trials);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, std::string("experiment spec: ") + e.what());
  }
  return s;
}

inline json to_json(const harness::ExperimentSpec& s) {
  return json{{"kind", std::string(harness::to_string(s.kind))},
              {"lm", to_json(s.lm)},
              {"strategy", std::string(to_string(s.strategy))},
              {"alpha", s.alphas},
              {"n", s.ns},
              {"T", s.lengths},
              {"trials", s.trials},
              {"null_trials", s.null_trials},
              {"attack", to_json(s.attack)},
              {"fpr_targets", s.fpr_targets},
              {"master_seed", s.master_seed},
              {"context_window", s.context_window},
              {"skip_repeats", s.skip_repeats},
              {"record_trials", s.record_trials}};
}

inline json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::parse_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace ensmark::io
