#include "amplify/codes.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "amplify/error.hpp"

namespace amplify {

BitString constant_weight_encode(const BitString& m) {
  BitString out(2 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.set(2 * i + (m[i] ? 0 : 1), true);
  return out;
}

std::optional<BitString> constant_weight_decode(const BitString& c) {
  if (c.size() % 2 != 0) return std::nullopt;
  BitString out(c.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool a = c[2 * i], b = c[2 * i + 1];
    if (a == b) return std::nullopt;
    out.set(i, a);
  }
  return out;
}

std::size_t edit_distance_small(std::uint64_t a, std::size_t na, std::uint64_t b, std::size_t nb) {
  if (na > 64 || nb > 64) throw RangeError("edit_distance_small handles at most 64 bits");
  if (na == 0 || nb == 0) return na + nb;
  // Bit j of the match masks refers to b's bit index j (value bit nb-1-j).
  std::uint64_t match1 = 0;
  for (std::size_t j = 0; j < nb; ++j) {
    if ((b >> (nb - 1 - j)) & 1u) match1 |= std::uint64_t{1} << j;
  }
  const std::uint64_t full = nb == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << nb) - 1;
  const std::uint64_t match0 = ~match1 & full;
  std::uint64_t v = full;
  for (std::size_t i = 0; i < na; ++i) {
    const std::uint64_t m = ((a >> (na - 1 - i)) & 1u) ? match1 : match0;
    const std::uint64_t u = v & m;
    v = ((v + u) | (v & ~m)) & full;
  }
  const std::size_t lcs = nb - static_cast<std::size_t>(std::popcount(v));
  return na + nb - 2 * lcs;
}

namespace {

__extension__ typedef unsigned __int128 u128;

std::size_t required(double e, std::size_t lambda_c) {
  return static_cast<std::size_t>(std::ceil(e * static_cast<double>(lambda_c) - 1e-9));
}

std::size_t codeword_distance(const BitString& a, const BitString& b) {
  if (a.size() <= 64 && b.size() <= 64) {
    return edit_distance_small(a.to_uint(), a.size(), b.to_uint(), b.size());
  }
  return edit_distance(a, b);
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<std::uint64_t>(r);
}

// Lexicographic unranking of weight-w strings of length n.
BitString unrank(std::uint64_t r, std::size_t n, std::size_t w) {
  BitString out(n);
  for (std::size_t i = 0; i < n && w > 0; ++i) {
    const std::uint64_t zeros_first = binomial(n - i - 1, w);
    if (r < zeros_first) continue;
    r -= zeros_first;
    out.set(i, true);
    --w;
  }
  return out;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Fixed-key Feistel permutation of [0, size) with cycle walking.
class IndexPermutation {
 public:
  explicit IndexPermutation(std::uint64_t size) : size_(size) {
    const auto bits = static_cast<unsigned>(std::bit_width(size <= 1 ? 1 : size - 1));
    half_ = (bits + 1) / 2;
    if (half_ == 0) half_ = 1;
  }

  std::uint64_t operator()(std::uint64_t i) const {
    do {
      i = encrypt(i);
    } while (i >= size_);
    return i;
  }

 private:
  std::uint64_t encrypt(std::uint64_t v) const {
    const std::uint64_t mask = (std::uint64_t{1} << half_) - 1;
    std::uint64_t l = v >> half_, r = v & mask;
    for (std::uint64_t round = 0; round < 4; ++round) {
      const std::uint64_t f = mix(r ^ (round << 56) ^ 0x6564697420636f64ull) & mask;
      const std::uint64_t next = l ^ f;
      l = r;
      r = next;
    }
    return (l << half_) | r;
  }

  std::uint64_t size_;
  unsigned half_;
};

std::string format_fraction(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

EditCodebook::EditCodebook(std::size_t lambda_m, std::size_t lambda_c, double e,
                           std::size_t weight, std::vector<BitString> entries)
    : lambda_m_(lambda_m), lambda_c_(lambda_c), e_(e), weight_(weight),
      entries_(std::move(entries)) {}

std::size_t EditCodebook::required_distance() const noexcept { return required(e_, lambda_c_); }

BitString EditCodebook::encode(const BitString& m) const {
  if (m.size() != lambda_m_) {
    throw RangeError("message has " + std::to_string(m.size()) + " bits, code expects " +
                     std::to_string(lambda_m_));
  }
  return entries_.at(static_cast<std::size_t>(m.to_uint()));
}

std::optional<BitString> EditCodebook::decode_exact(const BitString& c) const {
  if (c.size() != lambda_c_ || amplify::weight(c) != weight_) return std::nullopt;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] == c) return BitString::from_uint(i, lambda_m_);
  }
  return std::nullopt;
}

CodeVerification EditCodebook::verify() const {
  CodeVerification v;
  v.codewords = entries_.size();
  v.min_distance = lambda_c_ * 2;
  const std::size_t need = required_distance();
  for (const auto& c : entries_) {
    if (c.size() != lambda_c_) ++v.length_violations;
    if (amplify::weight(c) != weight_) ++v.weight_violations;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      const std::size_t d = codeword_distance(entries_[i], entries_[j]);
      if (d == 0) ++v.duplicate_codewords;
      if (d < need) ++v.distance_violations;
      v.min_distance = std::min(v.min_distance, d);
    }
  }
  return v;
}

std::string EditCodebook::to_text() const {
  std::ostringstream out;
  out << lambda_m_ << ' ' << lambda_c_ << ' ' << format_fraction(e_) << ' ' << weight_ << '\n';
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out << BitString::from_uint(i, lambda_m_).to_string() << ' ' << entries_[i].to_string()
        << '\n';
  }
  return out.str();
}

EditCodebook EditCodebook::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t lambda_m = 0, lambda_c = 0, w = 0;
  double e = 0.0;
  if (!(in >> lambda_m >> lambda_c >> e >> w)) throw FormatError("codebook header malformed");
  if (lambda_m > kMaxCodeMessageBits) throw FormatError("codebook message length too large");
  std::vector<BitString> entries(std::size_t{1} << lambda_m);
  std::vector<bool> seen(entries.size(), false);
  std::string msg, word;
  while (in >> msg >> word) {
    const BitString m = BitString::from_string(msg);
    if (m.size() != lambda_m) throw FormatError("codebook message of the wrong length");
    const auto idx = static_cast<std::size_t>(m.to_uint());
    if (seen[idx]) throw FormatError("codebook message listed twice");
    seen[idx] = true;
    entries[idx] = BitString::from_string(word);
  }
  for (bool s : seen) {
    if (!s) throw FormatError("codebook is missing messages");
  }
  EditCodebook book(lambda_m, lambda_c, e, w, std::move(entries));
  if (!book.verify().ok(std::size_t{1} << lambda_m)) {
    throw FormatError("codebook failed verification on load");
  }
  return book;
}

EditCodebook edit_code_generate(std::size_t lambda_m, double e, double rho) {
  if (lambda_m > kMaxCodeMessageBits) {
    throw ConfigError("lambda_m above the exhaustive-verification bound of 12");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rate must lie in (0, 1]");
  const double c = static_cast<double>(lambda_m) / rho;
  const auto lambda_c = static_cast<std::size_t>(std::llround(c));
  if (std::abs(c - static_cast<double>(lambda_c)) > 1e-9 || lambda_c == 0) {
    throw ConfigError("lambda_m / rho is not a positive integer");
  }
  if (lambda_c % 2 != 0) throw ConfigError("codeword length must be even");
  if (lambda_c > 64) throw ConfigError("codeword length above 64 bits");

  const std::size_t w = lambda_c / 2;
  const std::size_t target = std::size_t{1} << lambda_m;
  const std::size_t need = required(e, lambda_c);
  const std::uint64_t space = binomial(lambda_c, w);
  const IndexPermutation order(space);

  std::vector<BitString> admitted;
  std::vector<std::uint64_t> packed;
  for (std::uint64_t i = 0; i < space && admitted.size() < target; ++i) {
    const BitString cand = unrank(order(i), lambda_c, w);
    const std::uint64_t v = cand.to_uint();
    bool ok = true;
    for (std::uint64_t other : packed) {
      if (edit_distance_small(v, lambda_c, other, lambda_c) < need) {
        ok = false;
        break;
      }
    }
    if (ok) {
      admitted.push_back(cand);
      packed.push_back(v);
    }
  }
  if (admitted.size() < target) {
    throw CodeGenerationError("greedy search found " + std::to_string(admitted.size()) + " of " +
                                  std::to_string(target) + " codewords at e = " +
                                  format_fraction(e) + ", rho = " + format_fraction(rho),
                              admitted.size());
  }
  EditCodebook book(lambda_m, lambda_c, e, w, std::move(admitted));
  if (!book.verify().ok(target)) throw CodeGenerationError("generated codebook failed", target);
  return book;
}

EditCodebook edit_code_cached(const std::filesystem::path& dir, std::size_t lambda_m, double e,
                              double rho) {
  const auto path = dir / ("edit-" + std::to_string(lambda_m) + "-" + format_fraction(e) + "-" +
                           format_fraction(rho) + ".code");
  if (std::ifstream in{path}) {
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      EditCodebook book = EditCodebook::parse(buf.str());
      if (book.lambda_m() == lambda_m && std::abs(book.e() - e) < 1e-12) return book;
    } catch (const FormatError&) {
      // Fall through and regenerate over the bad file.
    }
  }
  EditCodebook book = edit_code_generate(lambda_m, e, rho);
  std::filesystem::create_directories(dir);
  std::ofstream out{path};
  out << book.to_text();
  return book;
}

}  // namespace amplify
