// Generate one watermarked sequence with a 3-key ensemble, then test it with
// the right keys and with a wrong key set.

#include <cstdio>
#include <vector>

#include "ensmark/ensmark.hpp"

int main() {
  using namespace ensmark;

  const SyntheticLM lm{/*seed=*/7, /*vocab=*/1000, /*beta=*/4.0};

  EnsembleConfig cfg;
  cfg.strategy = ReweightStrategy::dip(0.3);
  cfg.secret_keys = {SecretKey::from_hex("000102030405060708090a0b0c0d0e0f"),
                     SecretKey::from_hex("101112131415161718191a1b1c1d1e1f"),
                     SecretKey::from_hex("202122232425262728292a2b2c2d2e2f")};

  const std::vector<TokenId> prompt{17, 4, 256, 9};
  const auto rec = generate(lm, cfg, prompt, /*length=*/250, /*rng_seed=*/42);

  DetectOptions opts;
  opts.fpr = 1e-4;
  const auto hit = detect_ensemble(rec.sequence, cfg, lm.vocab_size(), opts);
  std::printf("right keys: s_ens=%.3f ln p=%.1f detected=%d\n", hit.s_ens, hit.log_p_ens, hit.decision);

  EnsembleConfig wrong = cfg;
  wrong.secret_keys[0] = SecretKey::from_hex("ffffffffffffffffffffffffffffffff");
  wrong.secret_keys[1] = SecretKey::from_hex("eeeeeeeeeeeeeeeeeeeeeeeeeeeeeeee");
  wrong.secret_keys[2] = SecretKey::from_hex("dddddddddddddddddddddddddddddddd");
  const auto miss = detect_ensemble(rec.sequence, wrong, lm.vocab_size(), opts);
  std::printf("wrong keys: s_ens=%.3f ln p=%.1f detected=%d\n", miss.s_ens, miss.log_p_ens, miss.decision);

  std::printf("optimal ensemble size for gamma=0.5, eps=1.8: n* = %.3f\n", analysis::optimal_n(0.5, 1.8));
  return 0;
}
