// ensmark: ensemble watermark generation, detection and experiments.

#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace ensmark::cli;

  CLI::App app{"Ensemble unbiased watermarking: generate, detect, analyze, experiment, selftest"};
  app.require_subcommand(1);
  app.footer("Environment: ENSMARK_THREADS caps experiment parallelism (0 = all cores).");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a watermarked sequence (JSONL record)");
  generate->add_option("-c,--config", gen.config_path, "Generate config JSON (lm, ensemble, prompt, T, seed)")
      ->required();
  generate->add_option("-o,--out", gen.output_path, "Output JSONL path (default stdout)");
  generate->add_option("--set", gen.overrides, "Override a config field, e.g. --set T=500 --set ensemble.alpha=0.4");
  generate->add_flag("--preseed-history", gen.preseed_history,
                     "Mark the prompt's a-grams as already seen before the first step");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Detect the ensemble watermark in JSONL records");
  detect->add_option("-c,--config", det.config_path, "Ensemble block or full generate config JSON")->required();
  detect->add_option("-i,--input", det.input_path, "JSONL records to test")->required();
  detect->add_option("-o,--out", det.output_path, "Output path for JSON reports (default stdout)");
  detect->add_option("--keys", det.keys, "Secret keys (32 hex chars each); must match n")->delimiter(',');
  auto* threshold = detect->add_option("--threshold", det.threshold, "Decision threshold on the aggregated score");
  detect->add_option("--fpr", det.fpr, "Target false-positive rate (Hoeffding bound; default 0.01)")
      ->excludes(threshold);
  detect->add_option("--vocab-size", det.vocab_size, "Vocabulary size when the config has no lm block");
  detect->add_option("--aggregation", det.aggregation, "sum or z_mean")->check(CLI::IsMember({"sum", "z", "z_mean"}));
  detect->add_flag("--skip-repeats", det.skip_repeats, "Score each context window only once");
  detect->add_option("--set", det.overrides, "Override a config field");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Ensemble-size trade-off curve (CSV)");
  analyze->add_option("--gamma", ana.gamma, "Green fraction gamma in (0,1)")->capture_default_str();
  analyze->add_option("--eps", ana.eps, "Boost factor eps, at most 1/gamma")->capture_default_str();
  analyze->add_option("-T,--T", ana.length, "Sequence length")->capture_default_str();
  analyze->add_option("-C,--C", ana.c, "Bound constant")->capture_default_str();
  analyze->add_option("--n-max", ana.n_max, "Largest ensemble size")->capture_default_str();
  analyze->add_option("-o,--out", ana.output_path, "Output CSV path (default stdout)");

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec (power, null or unbiasedness)");
  experiment->add_option("-s,--spec", exp.spec_path, "Experiment spec JSON")->required();
  experiment->add_option("-o,--out", exp.output_path, "Output CSV path (default stdout)");
  experiment->add_option("--trials-out", exp.trials_path, "Per-trial JSONL output path");
  experiment->add_option("--set", exp.overrides, "Override a spec field, e.g. --set trials=200");

  auto* selftest = app.add_subcommand("selftest", "Check PRF/permutation golden vectors and exact unbiasedness");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  if (*generate) return cmd_generate(gen, std::cout, std::cerr);
  if (*detect) return cmd_detect(det, std::cout, std::cerr);
  if (*analyze) return cmd_analyze(ana, std::cout, std::cerr);
  if (*experiment) return cmd_experiment(exp, std::cout, std::cerr);
  if (*selftest) return cmd_selftest(std::cout, std::cerr);
  return kExitError;
}
