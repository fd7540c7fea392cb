#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace amplify::gf2 {

/// Polynomials over GF(2) packed 64 coefficients per word: bit j of word w is
/// the coefficient of z^(64w + j).
using Poly = std::vector<std::uint64_t>;

/// 64 x 64 -> 128 bit carry-less product, returned as {low, high}.
struct Wide {
  std::uint64_t lo;
  std::uint64_t hi;
};
Wide clmul64(std::uint64_t a, std::uint64_t b) noexcept;

/// Full product a * b (a.size() + b.size() words). Uses schoolbook
/// multiplication below a threshold and Karatsuba above it.
Poly multiply(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Reference product, one coefficient at a time. Only for tests.
Poly multiply_naive(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// True when the CPU carry-less multiply instruction is used.
bool hardware_clmul() noexcept;

/// Multiplication in GF(2^n) for n <= 64 modulo z^n + low(z), where `low`
/// holds the coefficients below z^n.
std::uint64_t field_multiply(std::uint64_t x, std::uint64_t y, unsigned n,
                             std::uint64_t low) noexcept;

}  // namespace amplify::gf2
