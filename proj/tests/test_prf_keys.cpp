#include <gtest/gtest.h>

#include <fstream>
#include <vector>

#include "ensmark/keys.hpp"
#include "ensmark/prf.hpp"
#include "ensmark/reweight.hpp"
#include "golden_vectors.hpp"
#include "json.hpp"

using namespace ensmark;
using nlohmann::json;

namespace {

json load_vectors() {
  std::ifstream in(std::string(ENSMARK_TESTDATA_DIR) + "/prf_vectors.json");
  EXPECT_TRUE(in.good());
  return json::parse(in);
}

std::uint64_t parse_u64(const json& v) {
  return v.is_string() ? std::stoull(v.get<std::string>(), nullptr, 0) : v.get<std::uint64_t>();
}

}  // namespace

TEST(Golden, FoldMatchesReference) {
  const json j = load_vectors();
  ASSERT_FALSE(j.at("fold").empty());
  for (const auto& v : j.at("fold")) {
    std::vector<std::uint64_t> words;
    for (const auto& w : v.at("words")) words.push_back(parse_u64(w));
    EXPECT_EQ(prf::fold(words), parse_u64(v.at("value")));
  }
}

TEST(Golden, DeriveMatchesReference) {
  const json j = load_vectors();
  ASSERT_FALSE(j.at("prf_derive").empty());
  for (const auto& v : j.at("prf_derive")) {
    const auto ctx = v.at("context").get<std::vector<TokenId>>();
    const auto key = prf_derive(SecretKey::from_hex(v.at("secret_key").get<std::string>()), ctx,
                                v.at("member_index").get<std::uint64_t>());
    EXPECT_EQ(key.seed, parse_u64(v.at("seed")));
  }
}

TEST(Golden, PermutationMatchesReference) {
  const json j = load_vectors();
  ASSERT_FALSE(j.at("permutation").empty());
  for (const auto& v : j.at("permutation")) {
    const auto expected = v.at("permutation").get<std::vector<TokenId>>();
    const auto perm = keyed_permutation(WatermarkKey{parse_u64(v.at("key"))}, expected.size());
    EXPECT_EQ(std::vector<TokenId>(perm.order().begin(), perm.order().end()), expected);
  }
}

TEST(Golden, EmbeddedTableAgreesWithJson) {
  const json j = load_vectors();
  ASSERT_EQ(j.at("fold").size(), golden::kFold.size());
  ASSERT_EQ(j.at("prf_derive").size(), golden::kDerive.size());
  ASSERT_EQ(j.at("permutation").size(), golden::kPermutation.size());
  for (std::size_t i = 0; i < golden::kFold.size(); ++i)
    EXPECT_EQ(golden::kFold[i].value, parse_u64(j["fold"][i]["value"]));
  for (std::size_t i = 0; i < golden::kDerive.size(); ++i)
    EXPECT_EQ(golden::kDerive[i].seed, parse_u64(j["prf_derive"][i]["seed"]));
  for (std::size_t i = 0; i < golden::kPermutation.size(); ++i)
    EXPECT_EQ(golden::kPermutation[i].key, parse_u64(j["permutation"][i]["key"]));
}

TEST(Golden, SpotValues) {
  EXPECT_EQ(prf::fold({0}), 16294208416658607535ULL);
  const std::vector<TokenId> ctx{3, 7};
  const auto sk = SecretKey::from_hex("00000000000000000000000000000001");
  EXPECT_EQ(prf_derive(sk, ctx, 0).seed, 17070743758077271231ULL);
  EXPECT_EQ(prf_derive(sk, ctx, 1).seed, 9457471359896701589ULL);
}

TEST(Prf, SplitMixBelowStaysInRange) {
  prf::SplitMix64 rng(99);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(7), 7u);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Keys, ContextAndMemberSeparateKeys) {
  const auto sk = SecretKey::from_hex("0123456789abcdef0123456789abcdef");
  const std::vector<TokenId> a{5, 6}, b{6, 5};
  EXPECT_NE(prf_derive(sk, a).seed, prf_derive(sk, b).seed);
  EXPECT_NE(prf_derive(sk, a, 0).seed, prf_derive(sk, a, 1).seed);
  EXPECT_EQ(prf_derive(sk, a).seed, prf_derive(sk, a).seed);
}

TEST(Keys, DuplicateSecretKeysRejected) {
  const auto k1 = SecretKey::from_hex("00000000000000000000000000000001");
  const auto k2 = SecretKey::from_hex("00000000000000000000000000000002");
  const std::vector<SecretKey> ok{k1, k2}, dup{k1, k2, k1};
  EXPECT_NO_THROW(require_distinct(ok));
  try {
    require_distinct(dup);
    FAIL() << "expected DuplicateKey";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::duplicate_key);
  }
  const std::vector<TokenId> ctx{1, 2};
  EXPECT_EQ(derive_all(ok, ctx).size(), 2u);
}

TEST(ContextHistory, RecordsSeenWindows) {
  ContextHistory h;
  const std::vector<TokenId> a{1, 2}, b{2, 3};
  EXPECT_FALSE(h.check_and_record(a));
  EXPECT_FALSE(h.check_and_record(b));
  EXPECT_TRUE(h.check_and_record(a));
  EXPECT_TRUE(h.contains(b));
  EXPECT_EQ(h.size(), 2u);
}
