#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "amplify/bits.hpp"

namespace amplify {

// ---- Strong seeded extraction ---------------------------------------------

/// Toeplitz hashing. Output bit j is the GF(2) inner product of w with row j
/// of the m x n Toeplitz matrix T[j][i] = seed[j + n - 1 - i]. The first m'
/// output bits for a seed of length n + m - 1 equal the full output for the
/// seed's first n + m' - 1 bits.
BitString toeplitz_extract(const BitString& w, const BitString& seed, std::size_t m);
std::size_t toeplitz_seed_length(std::size_t n, std::size_t m) noexcept;
/// Leftover-hash error 2^((m - k)/2 - 1) for a source of min-entropy k.
double toeplitz_error_bound(double m, double k) noexcept;

enum class SeededKind { toeplitz, random_oracle_sim };

/// Seeded extractor chosen by configuration. The random-oracle variant
/// (BLAKE2b-keyed ChaCha20 stream over (w, seed)) accepts any seed length and
/// carries no information-theoretic guarantee.
struct SeededExtractor {
  SeededKind kind = SeededKind::toeplitz;
  std::uint64_t session_seed = 0;
  /// Seed length used by the random-oracle variant.
  std::size_t oracle_seed_bits = 64;

  std::size_t seed_length(std::size_t n, std::size_t m) const noexcept;
  BitString extract(const BitString& w, const BitString& seed, std::size_t m) const;
  bool simulation_only() const noexcept { return kind == SeededKind::random_oracle_sim; }
  std::string name() const;
};

std::string_view seeded_kind_name(SeededKind kind);
SeededKind parse_seeded_kind(std::string_view name);

// ---- Two-source extraction -------------------------------------------------

/// Irreducible z^n + low(z) pinned for n in {4, 8, 16, 32, 64}; returns
/// low(z). Throws ConfigError for other n.
std::uint64_t gf2n_modulus_low(std::size_t n);
bool gf2n_supported(std::size_t n) noexcept;

/// Product in GF(2^n); bit index 0 of each operand is the coefficient of
/// z^(n-1). The multiplicative identity is 0...01.
BitString gf2n_multiply(const BitString& x, const BitString& y);
/// First m bits of x * y in GF(2^n).
BitString gf2n_product_extract(const BitString& x, const BitString& y, std::size_t m);
/// Strong-extractor error (1/2) * 2^((n + m - k1 - k2)/2), from the
/// character-sum bound for the field-product family.
double gf2n_strong_bound(double n, double m, double k1, double k2) noexcept;

/// Keyed pseudorandom function of (x, y) truncated to m bits. Simulation
/// only: carries no information-theoretic guarantee.
BitString random_oracle_two_source(const BitString& x, const BitString& y, std::size_t m,
                                   std::uint64_t session_seed);

enum class TwoSourceKind { gf2n_product, random_oracle_sim };

struct TwoSourceExtractor {
  TwoSourceKind kind = TwoSourceKind::gf2n_product;
  /// Field size for the product extractor. Operands are cut to their first
  /// `window` bits or padded with trailing zeros.
  std::size_t window = 8;
  std::uint64_t session_seed = 0;

  BitString operator()(const BitString& x, const BitString& y, std::size_t m) const;
  /// True when operands of these lengths are used without cutting or padding.
  bool exact_fit(std::size_t n1, std::size_t n2) const noexcept;
  bool simulation_only() const noexcept { return kind == TwoSourceKind::random_oracle_sim; }
  std::string name() const;
};

std::string_view two_source_kind_name(TwoSourceKind kind);
TwoSourceKind parse_two_source_kind(std::string_view name);

// ---- Somewhere condensing and SR extraction ---------------------------------

/// Basic block (a, b) -> (a mod p, b mod p, a*b mod p) on the two halves of
/// a row, iterated on every row. Each output row of an input row of width L
/// has width max(L/2, bits(p - 1)). Halves must fit in 62 bits.
struct CondenserSpec {
  std::size_t n = 0;
  unsigned iterations = 1;
  std::uint64_t p = 251;

  void validate() const;
  std::size_t rows() const noexcept;
  std::size_t row_length() const;
};

BitMatrix somewhere_condense(const BitString& x, const CondenserSpec& spec);

/// XOR over rows i of ext(x, y_i, m).
BitString srg_extract(const BitString& x, const BitMatrix& y, std::size_t m,
                      const TwoSourceExtractor& ext);

}  // namespace amplify
