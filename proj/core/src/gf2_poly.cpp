#include "amplify/gf2_poly.hpp"

#include <algorithm>

#if defined(__PCLMUL__) && defined(__SSE4_1__)
#include <immintrin.h>
#define AMPLIFY_PCLMUL 1
#endif

namespace amplify::gf2 {

namespace {

constexpr std::size_t kSchoolbookWords = 16;

void schoolbook(const std::uint64_t* a, std::size_t na, const std::uint64_t* b, std::size_t nb,
                std::uint64_t* out) {
  for (std::size_t i = 0; i < na; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < nb; ++j) {
      const Wide p = clmul64(a[i], b[j]);
      out[i + j] ^= p.lo;
      out[i + j + 1] ^= p.hi;
    }
  }
}

// out (2n words, zeroed by the caller) ^= a * b for n-word operands.
void karatsuba(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
               std::uint64_t* out) {
  if (n <= kSchoolbookWords) {
    schoolbook(a, n, b, n, out);
    return;
  }
  const std::size_t h = (n + 1) / 2;
  const std::size_t rest = n - h;

  std::vector<std::uint64_t> a_sum(a, a + h), b_sum(b, b + h);
  for (std::size_t i = 0; i < rest; ++i) {
    a_sum[i] ^= a[h + i];
    b_sum[i] ^= b[h + i];
  }

  std::vector<std::uint64_t> low(2 * h, 0), mid(2 * h, 0), high(2 * h, 0);
  karatsuba(a, b, h, low.data());
  if (rest == h) {
    karatsuba(a + h, b + h, h, high.data());
  } else {
    std::vector<std::uint64_t> a_hi(h, 0), b_hi(h, 0);
    std::copy(a + h, a + n, a_hi.begin());
    std::copy(b + h, b + n, b_hi.begin());
    karatsuba(a_hi.data(), b_hi.data(), h, high.data());
  }
  karatsuba(a_sum.data(), b_sum.data(), h, mid.data());
  for (std::size_t i = 0; i < 2 * h; ++i) mid[i] ^= low[i] ^ high[i];

  for (std::size_t i = 0; i < 2 * h && i < 2 * n; ++i) out[i] ^= low[i];
  for (std::size_t i = 0; i < 2 * h && h + i < 2 * n; ++i) out[h + i] ^= mid[i];
  for (std::size_t i = 0; i < 2 * h && 2 * h + i < 2 * n; ++i) out[2 * h + i] ^= high[i];
}

}  // namespace

Wide clmul64(std::uint64_t a, std::uint64_t b) noexcept {
#ifdef AMPLIFY_PCLMUL
  const __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  const __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  const __m128i r = _mm_clmulepi64_si128(va, vb, 0x00);
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(r)),
          static_cast<std::uint64_t>(_mm_extract_epi64(r, 1))};
#else
  std::uint64_t lo = 0, hi = 0;
  for (unsigned i = 0; i < 64; ++i) {
    if ((b >> i) & 1u) {
      lo ^= a << i;
      if (i != 0) hi ^= a >> (64 - i);
    }
  }
  return {lo, hi};
#endif
}

bool hardware_clmul() noexcept {
#ifdef AMPLIFY_PCLMUL
  return true;
#else
  return false;
#endif
}

Poly multiply(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  Poly out(a.size() + b.size(), 0);
  if (a.empty() || b.empty()) return out;
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t n = a.size();
  if (n <= kSchoolbookWords) {
    schoolbook(a.data(), n, b.data(), b.size(), out.data());
    return out;
  }
  // Unbalanced operands: cut the longer one into n-word chunks.
  std::vector<std::uint64_t> chunk(n), partial(2 * n);
  for (std::size_t off = 0; off < b.size(); off += n) {
    const std::size_t len = std::min(n, b.size() - off);
    std::fill(chunk.begin(), chunk.end(), 0);
    std::copy(b.begin() + off, b.begin() + off + len, chunk.begin());
    std::fill(partial.begin(), partial.end(), 0);
    karatsuba(a.data(), chunk.data(), n, partial.data());
    for (std::size_t i = 0; i < 2 * n && off + i < out.size(); ++i) out[off + i] ^= partial[i];
  }
  return out;
}

Poly multiply_naive(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  Poly out(a.size() + b.size(), 0);
  for (std::size_t i = 0; i < a.size() * 64; ++i) {
    if (!((a[i / 64] >> (i % 64)) & 1u)) continue;
    for (std::size_t j = 0; j < b.size() * 64; ++j) {
      if ((b[j / 64] >> (j % 64)) & 1u) out[(i + j) / 64] ^= std::uint64_t{1} << ((i + j) % 64);
    }
  }
  return out;
}

std::uint64_t field_multiply(std::uint64_t x, std::uint64_t y, unsigned n,
                             std::uint64_t low) noexcept {
  Wide p = clmul64(x, y);
  // Fold everything at or above z^n back down using z^n = low(z).
  if (n == 64) {
    while (p.hi != 0) {
      const Wide f = clmul64(p.hi, low);
      p.lo ^= f.lo;
      p.hi = f.hi;
    }
    return p.lo;
  }
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (;;) {
    const std::uint64_t top = (p.lo >> n) | (n == 0 ? 0 : p.hi << (64 - n));
    const std::uint64_t top_hi = p.hi >> n;
    if (top == 0 && top_hi == 0) break;
    const Wide f = clmul64(top, low);
    const Wide g = clmul64(top_hi, low);
    p.lo = (p.lo & mask) ^ f.lo;
    p.hi = f.hi ^ g.lo;
  }
  return p.lo;
}

}  // namespace amplify::gf2
