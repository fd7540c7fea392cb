#include "amplify/extractors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "amplify/entropy.hpp"
#include "amplify/error.hpp"
#include "amplify/random.hpp"

namespace amplify {
namespace {

BitString B(const char* s) { return BitString::from_string(s); }

// Explicit matrix-vector product with T[j][i] = seed[j + n - 1 - i].
BitString toeplitz_oracle(const BitString& w, const BitString& seed, std::size_t m) {
  const std::size_t n = w.size();
  BitString out(m);
  for (std::size_t j = 0; j < m; ++j) {
    bool acc = false;
    for (std::size_t i = 0; i < n; ++i) acc ^= w[i] && seed[j + n - 1 - i];
    out.set(j, acc);
  }
  return out;
}

TEST(Toeplitz, ZeroSeedAndZeroSource) {
  Rng rng(1);
  const BitString w = random_bits(rng, 20);
  EXPECT_EQ(toeplitz_extract(w, BitString(25), 6), BitString(6));
  EXPECT_EQ(toeplitz_extract(BitString(20), random_bits(rng, 25), 6), BitString(6));
  EXPECT_THROW(toeplitz_extract(w, BitString(24), 6), RangeError);
}

TEST(Toeplitz, SmallExplicitMatrix) {
  // n = 4, m = 2, seed s0..s4 = 10110:
  //   row 0: s3 s2 s1 s0 = 1 1 0 1
  //   row 1: s4 s3 s2 s1 = 0 1 1 0
  // w = 1011 -> row 0 . w = 1+0+0+1 = 0, row 1 . w = 0+0+1+0 = 1.
  EXPECT_EQ(toeplitz_extract(B("1011"), B("10110"), 2), B("01"));
  EXPECT_EQ(toeplitz_oracle(B("1011"), B("10110"), 2), B("01"));
}

TEST(Toeplitz, MatchesOracleAtManySizes) {
  Rng rng(2);
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 3}, {64, 64}, {65, 130},
                      {300, 17}, {1500, 2100}}) {
    const BitString w = random_bits(rng, n);
    const BitString seed = random_bits(rng, n + m - 1);
    EXPECT_EQ(toeplitz_extract(w, seed, m), toeplitz_oracle(w, seed, m)) << n << "," << m;
  }
}

TEST(Toeplitz, PrefixConsistency) {
  Rng rng(3);
  const BitString w = random_bits(rng, 200);
  const BitString seed = random_bits(rng, 200 + 500 - 1);
  const BitString full = toeplitz_extract(w, seed, 500);
  EXPECT_EQ(toeplitz_extract(w, prefix(seed, 200 + 37 - 1), 37), prefix(full, 37));
}

TEST(Toeplitz, ExactStrongDistanceAtTwelveBits) {
  SourceSpec s;
  s.n = 12;
  s.k = 6;
  s.seed = 77;
  const auto support = flat_support(s);
  const std::size_t m = 2, d = toeplitz_seed_length(12, m);
  double total = 0.0;
  for (std::uint64_t sv = 0; sv < (std::uint64_t{1} << d); ++sv) {
    const BitString seed = BitString::from_uint(sv, d);
    double counts[4] = {0, 0, 0, 0};
    for (const auto& w : support) counts[toeplitz_extract(w, seed, m).to_uint()] += 1.0;
    double sd = 0.0;
    for (double c : counts) sd += std::abs(c / support.size() - 0.25);
    total += 0.5 * sd;
  }
  const double distance = total / static_cast<double>(std::uint64_t{1} << d);
  EXPECT_LE(distance, toeplitz_error_bound(2, 6));
  EXPECT_DOUBLE_EQ(toeplitz_error_bound(2, 6), 0.125);
}

// GF(2^8) arithmetic through log tables built from the generator 0x03.
struct Gf256Tables {
  int exp[512];
  int log[256];
  Gf256Tables() {
    int x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = x;
      log[x] = i;
      x ^= (x << 1) ^ ((x & 0x80) ? 0x11B : 0);  // x * 3
      x &= 0xFF;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
  }
  int mul(int a, int b) const { return a && b ? exp[log[a] + log[b]] : 0; }
};

TEST(Gf2nProduct, IdentityAndAnnihilator) {
  Rng rng(4);
  const BitString y = random_bits(rng, 16);
  EXPECT_EQ(gf2n_product_extract(BitString(16), y, 5), BitString(5));
  EXPECT_EQ(gf2n_product_extract(BitString::from_uint(1, 16), y, 5), prefix(y, 5));
  EXPECT_THROW(gf2n_product_extract(BitString(12), BitString(12), 3), ConfigError);
}

TEST(Gf2nProduct, MatchesLogTables) {
  const Gf256Tables t;
  // 0x57 * 0x83 = 0xC1 in the AES field.
  EXPECT_EQ(t.mul(0x57, 0x83), 0xC1);
  EXPECT_EQ(gf2n_product_extract(BitString::from_uint(0x57, 8), BitString::from_uint(0x83, 8), 3),
            B("110"));
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; b += 7) {
      ASSERT_EQ(gf2n_multiply(BitString::from_uint(a, 8), BitString::from_uint(b, 8)).to_uint(),
                static_cast<std::uint64_t>(t.mul(a, b)));
    }
  }
}

TEST(Gf2nProduct, ExactStrongDistanceAtEightBits) {
  SourceSpec sx, sy;
  sx.n = sy.n = 8;
  sx.k = sy.k = 6;
  sx.seed = 1;
  sy.seed = 2;
  const auto xs = flat_support(sx), ys = flat_support(sy);
  double total = 0.0;
  for (const auto& y : ys) {
    double ones = 0.0;
    for (const auto& x : xs) ones += gf2n_product_extract(x, y, 1)[0];
    total += std::abs(ones / xs.size() - 0.5);
  }
  const double distance = total / ys.size();
  EXPECT_LE(distance, gf2n_strong_bound(8, 1, 6, 6));
}

TEST(Condenser, Examples) {
  const BitString x = concat(BitString::from_uint(7, 8), BitString::from_uint(13, 8));
  CondenserSpec none{16, 0, 251};
  EXPECT_EQ(somewhere_condense(x, none), BitMatrix::single(x));
  CondenserSpec one{16, 1, 251};
  const BitMatrix rows = somewhere_condense(x, one);
  ASSERT_EQ(rows.rows(), 3u);
  EXPECT_EQ(rows.row(0).to_uint(), 7u);
  EXPECT_EQ(rows.row(1).to_uint(), 13u);
  EXPECT_EQ(rows.row(2).to_uint(), 91u);
  CondenserSpec two{16, 2, 251};
  EXPECT_EQ(somewhere_condense(x, two).rows(), 9u);
  EXPECT_THROW(somewhere_condense(BitString(15), CondenserSpec{15, 1, 251}), ConfigError);
  EXPECT_THROW((CondenserSpec{16, 1, 250}.validate()), ConfigError);
}

TEST(Condenser, RateGainOnBiasedSources) {
  const CondenserSpec spec{16, 1, 251};
  int gains = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    SourceSpec src;
    src.n = 16;
    src.k = 0.4 * 16;
    src.family = SourceFamily::biased_iid;
    src.seed = 1000 + s;
    const auto table = to_table(src);
    std::vector<std::map<std::uint64_t, double>> rows(spec.rows());
    for (const auto& [v, mass] : table.entries()) {
      const BitMatrix out = somewhere_condense(BitString::from_uint(v, 16), spec);
      for (std::size_t r = 0; r < out.rows(); ++r) rows[r][out.row(r).to_uint()] += mass;
    }
    double best = 0.0;
    for (const auto& row : rows) {
      double top = 0.0;
      for (const auto& [_, mass] : row) top = std::max(top, mass);
      best = std::max(best, -std::log2(top) / static_cast<double>(spec.row_length()));
    }
    if (best > 0.4) ++gains;
  }
  EXPECT_GE(gains, static_cast<int>(std::ceil(0.9 * seeds)));
}

TEST(SrgExtract, SingleRowAndCancellation) {
  const TwoSourceExtractor ext{TwoSourceKind::gf2n_product, 8, 0};
  Rng rng(5);
  const BitString x = random_bits(rng, 8), y = random_bits(rng, 8), z = random_bits(rng, 8);
  EXPECT_EQ(srg_extract(x, BitMatrix::single(y), 4, ext), ext(x, y, 4));
  EXPECT_EQ(srg_extract(x, BitMatrix({y, y, z}), 4, ext), ext(x, z, 4));
  EXPECT_THROW(srg_extract(x, BitMatrix(), 4, ext), RangeError);
}

TEST(SrgExtract, UniformRowGivesUnderlyingDistance) {
  const TwoSourceExtractor ext{TwoSourceKind::gf2n_product, 16, 0};
  SourceSpec sx;
  sx.n = 16;
  sx.k = 6;
  sx.seed = 8;
  const auto xs = flat_support(sx);
  const BitString c1 = BitString::from_uint(0x1234, 16), c2 = BitString::from_uint(0xBEEF, 16);
  const std::size_t m = 2;
  double srg_total = 0.0, base_total = 0.0;
  for (const auto& x : xs) {
    double srg_counts[4] = {}, base_counts[4] = {};
    for (std::uint64_t yv = 0; yv < 65536; ++yv) {
      const BitString y = BitString::from_uint(yv, 16);
      srg_counts[srg_extract(x, BitMatrix({c1, y, c2}), m, ext).to_uint()] += 1;
      base_counts[ext(x, y, m).to_uint()] += 1;
    }
    for (int v = 0; v < 4; ++v) {
      srg_total += std::abs(srg_counts[v] / 65536.0 - 0.25);
      base_total += std::abs(base_counts[v] / 65536.0 - 0.25);
    }
  }
  EXPECT_LE(0.5 * srg_total / xs.size(), 0.5 * base_total / xs.size() + 1e-12);
}

TEST(RandomOracle, DeterministicAndKeyed) {
  Rng rng(6);
  const BitString x = random_bits(rng, 40), y = random_bits(rng, 40);
  EXPECT_EQ(random_oracle_two_source(x, y, 100, 1), random_oracle_two_source(x, y, 100, 1));
  EXPECT_NE(random_oracle_two_source(x, y, 100, 1), random_oracle_two_source(x, y, 100, 2));
  EXPECT_EQ(prefix(random_oracle_two_source(x, y, 300, 1), 100),
            random_oracle_two_source(x, y, 100, 1));
}

TEST(RandomOracle, CollisionRateMatchesOutputLength) {
  Rng rng(7);
  const std::size_t m = 6, trials = std::size_t{1} << 20;
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const BitString a = random_oracle_two_source(random_bits(rng, 32), random_bits(rng, 32), m, 3);
    const BitString b = random_oracle_two_source(random_bits(rng, 32), random_bits(rng, 32), m, 3);
    collisions += a == b;
  }
  const double p = std::exp2(-static_cast<double>(m));
  const double mean = p * trials, sigma = std::sqrt(trials * p * (1 - p));
  EXPECT_NEAR(static_cast<double>(collisions), mean, 3 * sigma);
}

TEST(SeededExtractor, OracleVariantIsPrefixConsistent) {
  SeededExtractor ext{SeededKind::random_oracle_sim, 4, 16};
  Rng rng(8);
  const BitString w = random_bits(rng, 16), s = random_bits(rng, 16);
  EXPECT_EQ(prefix(ext.extract(w, s, 1000), 10), ext.extract(w, s, 10));
  EXPECT_TRUE(ext.simulation_only());
  EXPECT_EQ(ext.seed_length(16, 1000), 16u);
  EXPECT_EQ(parse_seeded_kind("toeplitz"), SeededKind::toeplitz);
  EXPECT_THROW(parse_seeded_kind("guv"), ConfigError);
}

}  // namespace
}  // namespace amplify
