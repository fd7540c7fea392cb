#include "amplify/extractors.hpp"

#include <bit>
#include <cmath>

#include "amplify/error.hpp"
#include "amplify/gf2_poly.hpp"
#include "amplify/random.hpp"

namespace amplify {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

BitString toeplitz_extract(const BitString& w, const BitString& seed, std::size_t m) {
  const std::size_t n = w.size();
  if (m == 0) return {};
  if (n == 0) return BitString(m);
  if (seed.size() != toeplitz_seed_length(n, m)) {
    throw RangeError("toeplitz seed has " + std::to_string(seed.size()) + " bits, expected " +
                     std::to_string(toeplitz_seed_length(n, m)));
  }
  // Coefficient j + n - 1 of seed(z) * w(z) is sum_i w[i] seed[j + n - 1 - i].
  const gf2::Poly product = gf2::multiply(seed.words(), w.words());
  const BitString full = BitString::from_words(product, product.size() * 64);
  return substring(full, n - 1, m);
}

std::size_t toeplitz_seed_length(std::size_t n, std::size_t m) noexcept {
  return m == 0 || n == 0 ? 0 : n + m - 1;
}

double toeplitz_error_bound(double m, double k) noexcept { return std::exp2((m - k) / 2.0 - 1.0); }

std::size_t SeededExtractor::seed_length(std::size_t n, std::size_t m) const noexcept {
  return kind == SeededKind::toeplitz ? toeplitz_seed_length(n, m) : oracle_seed_bits;
}

BitString SeededExtractor::extract(const BitString& w, const BitString& seed,
                                   std::size_t m) const {
  if (kind == SeededKind::toeplitz) return toeplitz_extract(w, seed, m);
  return PrfStream(prf_key(session_seed, "seeded-oracle")).absorb(w).absorb(seed).expand(m);
}

std::string SeededExtractor::name() const { return std::string(seeded_kind_name(kind)); }

std::string_view seeded_kind_name(SeededKind kind) {
  return kind == SeededKind::toeplitz ? "toeplitz" : "random-oracle-sim";
}

SeededKind parse_seeded_kind(std::string_view name) {
  if (name == "toeplitz") return SeededKind::toeplitz;
  if (name == "random-oracle-sim") return SeededKind::random_oracle_sim;
  throw ConfigError("unknown seeded extractor '" + std::string(name) + "'");
}

bool gf2n_supported(std::size_t n) noexcept {
  return n == 4 || n == 8 || n == 16 || n == 32 || n == 64;
}

std::uint64_t gf2n_modulus_low(std::size_t n) {
  switch (n) {
    case 4:
      return 0x3;  // z^4 + z + 1
    case 8:
      return 0x1B;  // z^8 + z^4 + z^3 + z + 1
    case 16:
      return 0x2B;  // z^16 + z^5 + z^3 + z + 1
    case 32:
      return 0x8D;  // z^32 + z^7 + z^3 + z^2 + 1
    case 64:
      return 0x1B;  // z^64 + z^4 + z^3 + z + 1
    default:
      throw ConfigError("no pinned irreducible polynomial for GF(2^" + std::to_string(n) + ")");
  }
}

BitString gf2n_multiply(const BitString& x, const BitString& y) {
  if (x.size() != y.size()) throw RangeError("field operands differ in length");
  const std::size_t n = x.size();
  const std::uint64_t low = gf2n_modulus_low(n);
  const std::uint64_t v =
      gf2::field_multiply(x.to_uint(), y.to_uint(), static_cast<unsigned>(n), low);
  return BitString::from_uint(v, n);
}

BitString gf2n_product_extract(const BitString& x, const BitString& y, std::size_t m) {
  if (m > x.size()) throw RangeError("field-product output longer than the field");
  return prefix(gf2n_multiply(x, y), m);
}

double gf2n_strong_bound(double n, double m, double k1, double k2) noexcept {
  return 0.5 * std::exp2((n + m - k1 - k2) / 2.0);
}

BitString random_oracle_two_source(const BitString& x, const BitString& y, std::size_t m,
                                   std::uint64_t session_seed) {
  return PrfStream(prf_key(session_seed, "two-source-oracle")).absorb(x).absorb(y).expand(m);
}

namespace {

BitString fit_window(const BitString& v, std::size_t window) {
  if (v.size() >= window) return prefix(v, window);
  BitString out = v;
  out.append(BitString(window - v.size()));
  return out;
}

}  // namespace

BitString TwoSourceExtractor::operator()(const BitString& x, const BitString& y,
                                         std::size_t m) const {
  if (kind == TwoSourceKind::random_oracle_sim) {
    return random_oracle_two_source(x, y, m, session_seed);
  }
  return gf2n_product_extract(fit_window(x, window), fit_window(y, window), m);
}

bool TwoSourceExtractor::exact_fit(std::size_t n1, std::size_t n2) const noexcept {
  return kind == TwoSourceKind::random_oracle_sim || (n1 == window && n2 == window);
}

std::string TwoSourceExtractor::name() const {
  if (kind == TwoSourceKind::random_oracle_sim) return "random-oracle-sim";
  return "gf2n-product(" + std::to_string(window) + ")";
}

std::string_view two_source_kind_name(TwoSourceKind kind) {
  return kind == TwoSourceKind::gf2n_product ? "gf2n-product" : "random-oracle-sim";
}

TwoSourceKind parse_two_source_kind(std::string_view name) {
  if (name == "gf2n-product") return TwoSourceKind::gf2n_product;
  if (name == "random-oracle-sim") return TwoSourceKind::random_oracle_sim;
  throw ConfigError("unknown two-source extractor '" + std::string(name) + "'");
}

namespace {

std::size_t bit_width_of(std::uint64_t v) noexcept {
  return static_cast<std::size_t>(std::bit_width(v));
}

std::size_t next_width(std::size_t width, std::uint64_t p) {
  if (width % 2 != 0) {
    throw ConfigError("condenser row width " + std::to_string(width) + " is odd");
  }
  if (width / 2 > 62) throw ConfigError("condenser halves wider than 62 bits");
  return std::max(width / 2, bit_width_of(p - 1));
}

}  // namespace

void CondenserSpec::validate() const {
  if (p < 2 || p >= (std::uint64_t{1} << 62)) throw ConfigError("condenser modulus out of range");
  for (std::uint64_t d = 2; d * d <= p && d < (1u << 20); ++d) {
    if (p % d == 0) throw ConfigError("condenser modulus " + std::to_string(p) + " is not prime");
  }
  row_length();
}

std::size_t CondenserSpec::rows() const noexcept {
  std::size_t d = 1;
  for (unsigned i = 0; i < iterations; ++i) d *= 3;
  return d;
}

std::size_t CondenserSpec::row_length() const {
  std::size_t width = n;
  for (unsigned i = 0; i < iterations; ++i) width = next_width(width, p);
  return width;
}

BitMatrix somewhere_condense(const BitString& x, const CondenserSpec& spec) {
  if (x.size() != spec.n) throw RangeError("condenser input length differs from spec.n");
  std::vector<BitString> rows{x};
  std::size_t width = spec.n;
  for (unsigned it = 0; it < spec.iterations; ++it) {
    const std::size_t out_width = next_width(width, spec.p);
    const std::size_t half = width / 2;
    std::vector<BitString> next;
    next.reserve(rows.size() * 3);
    for (const auto& r : rows) {
      const std::uint64_t a = prefix(r, half).to_uint() % spec.p;
      const std::uint64_t b = substring(r, half, half).to_uint() % spec.p;
      const auto c = static_cast<std::uint64_t>(
          static_cast<u128>(a) * b % spec.p);
      next.push_back(BitString::from_uint(a, out_width));
      next.push_back(BitString::from_uint(b, out_width));
      next.push_back(BitString::from_uint(c, out_width));
    }
    rows = std::move(next);
    width = out_width;
  }
  return BitMatrix(std::move(rows));
}

BitString srg_extract(const BitString& x, const BitMatrix& y, std::size_t m,
                      const TwoSourceExtractor& ext) {
  if (y.rows() == 0) throw RangeError("SR source has no rows");
  BitString out(m);
  for (const auto& row : y.row_list()) out ^= ext(x, row, m);
  return out;
}

}  // namespace amplify
