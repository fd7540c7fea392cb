#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "amplify/bits.hpp"

namespace amplify {

/// Per-worker generator for local randomness and sampling.
using Rng = std::mt19937_64;

/// 256-bit key for the keyed pseudorandom functions below.
using PrfKey = std::array<std::uint8_t, 32>;

/// Counter-mode derivation: BLAKE2b(master || label || index) truncated to
/// 64 bits. Distinct (label, index) pairs give independent-looking seeds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

/// Key derived from a 64-bit seed and a domain label.
PrfKey prf_key(std::uint64_t seed, std::string_view label);

/// `nbits` uniform bits from `rng`.
BitString random_bits(Rng& rng, std::size_t nbits);

/// Incrementally absorbs length-prefixed fields and expands the keyed
/// BLAKE2b digest through ChaCha20 into an arbitrarily long bit stream.
/// Output prefixes are consistent: expanding to m bits then to m' > m bits
/// agrees on the first m.
class PrfStream {
 public:
  explicit PrfStream(const PrfKey& key);
  PrfStream& absorb(const BitString& field);
  PrfStream& absorb(std::uint64_t field);
  PrfStream& absorb(std::string_view field);
  BitString expand(std::size_t nbits) const;

 private:
  std::vector<std::uint8_t> message_;
  PrfKey key_;
};

}  // namespace amplify
