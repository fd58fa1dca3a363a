#pragma once

// Golden vectors produced by tests/oracles/splitmix_reference.py (frozen copy of
// testdata/prf_vectors.json) so the binary can self-check without data files.

#include <array>
#include <cstdint>
#include <string_view>

namespace ensmark::golden {

struct FoldVector {
  std::array<std::uint64_t, 3> words;
  std::size_t count;
  std::uint64_t value;
};

struct DeriveVector {
  std::string_view secret_key;
  std::array<std::uint32_t, 3> context;
  std::size_t context_len;
  std::uint64_t member_index;
  std::uint64_t seed;
};

struct PermutationVector {
  std::uint64_t key;
  std::size_t vocab_size;
  std::array<std::uint32_t, 16> order;
};

inline constexpr std::array kFold{
    FoldVector{{0ULL, 0ULL, 0ULL}, 0, 0ULL},
    FoldVector{{0ULL, 0ULL, 0ULL}, 1, 16294208416658607535ULL},
    FoldVector{{1ULL, 2ULL, 3ULL}, 3, 15020427595393229491ULL},
    FoldVector{{18446744073709551615ULL, 0ULL, 18446744073709551615ULL}, 3, 10558057014317253275ULL},
};

inline constexpr std::array kDerive{
    DeriveVector{"00000000000000000000000000000001", {3, 7, 0}, 2, 0, 17070743758077271231ULL},
    DeriveVector{"00000000000000000000000000000001", {3, 7, 0}, 2, 1, 9457471359896701589ULL},
    DeriveVector{"000102030405060708090a0b0c0d0e0f", {3, 7, 0}, 2, 0, 3022858274499085318ULL},
    DeriveVector{"00000000000000000000000000000001", {0, 0, 0}, 0, 0, 2563386344919642211ULL},
    DeriveVector{"000102030405060708090a0b0c0d0e0f", {999, 0, 12345}, 3, 0, 13928455823720314464ULL},
};

inline constexpr std::array kPermutation{
    PermutationVector{42ULL, 4, {1, 3, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}},
    PermutationVector{42ULL, 10, {8, 3, 6, 5, 4, 0, 9, 2, 1, 7, 0, 0, 0, 0, 0, 0}},
    PermutationVector{16045690984503111693ULL, 16, {10, 14, 13, 12, 6, 3, 4, 2, 8, 7, 0, 5, 11, 1, 15, 9}},
};

}  // namespace ensmark::golden
