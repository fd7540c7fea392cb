#include "amplify/bits.hpp"

#include <algorithm>
#include <bit>
#include <queue>
#include <tuple>

#include "amplify/error.hpp"

namespace amplify {

namespace {

std::size_t word_count(std::size_t nbits) { return (nbits + 63) / 64; }

}  // namespace

BitString::BitString(std::size_t nbits, bool value)
    : words_(word_count(nbits), value ? ~std::uint64_t{0} : 0), nbits_(nbits) {
  clear_tail();
}

BitString BitString::from_string(std::string_view text) {
  BitString out(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      out.set(i, true);
    } else if (text[i] != '0') {
      throw FormatError("bit string contains '" + std::string(1, text[i]) + "'");
    }
  }
  return out;
}

BitString BitString::from_uint(std::uint64_t value, std::size_t nbits) {
  if (nbits > 64) throw RangeError("from_uint supports at most 64 bits");
  BitString out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) {
    out.set(i, (value >> (nbits - 1 - i)) & 1u);
  }
  return out;
}

BitString BitString::from_words(std::vector<std::uint64_t> words, std::size_t nbits) {
  if (words.size() < word_count(nbits)) throw RangeError("from_words: too few words");
  words.resize(word_count(nbits));
  BitString out;
  out.words_ = std::move(words);
  out.nbits_ = nbits;
  out.clear_tail();
  return out;
}

bool BitString::at(std::size_t i) const {
  if (i >= nbits_) throw RangeError("bit index out of range");
  return (*this)[i];
}

void BitString::set(std::size_t i, bool value) {
  if (i >= nbits_) throw RangeError("bit index out of range");
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

void BitString::flip(std::size_t i) {
  if (i >= nbits_) throw RangeError("bit index out of range");
  words_[i >> 6] ^= std::uint64_t{1} << (i & 63);
}

void BitString::push_back(bool value) {
  if ((nbits_ & 63) == 0) words_.push_back(0);
  ++nbits_;
  if (value) words_[(nbits_ - 1) >> 6] |= std::uint64_t{1} << ((nbits_ - 1) & 63);
}

void BitString::append(const BitString& other) {
  if (other.empty()) return;
  const std::size_t shift = nbits_ & 63;
  if (shift == 0) {
    words_.insert(words_.end(), other.words_.begin(), other.words_.end());
  } else {
    for (std::uint64_t w : other.words_) {
      words_.back() |= w << shift;
      words_.push_back(w >> (64 - shift));
    }
  }
  nbits_ += other.nbits_;
  words_.resize(word_count(nbits_));
  clear_tail();
}

std::uint64_t BitString::to_uint() const {
  if (nbits_ > 64) throw RangeError("to_uint supports at most 64 bits");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < nbits_; ++i) v = (v << 1) | ((*this)[i] ? 1u : 0u);
  return v;
}

std::string BitString::to_string() const {
  std::string out(nbits_, '0');
  for (std::size_t i = 0; i < nbits_; ++i) {
    if ((*this)[i]) out[i] = '1';
  }
  return out;
}

BitString& BitString::operator^=(const BitString& other) {
  if (other.nbits_ != nbits_) throw RangeError("xor of bit strings with different lengths");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

std::strong_ordering operator<=>(const BitString& a, const BitString& b) {
  if (auto c = a.nbits_ <=> b.nbits_; c != 0) return c;
  // Lexicographic on bit index 0 first.
  for (std::size_t w = 0; w < a.words_.size(); ++w) {
    const std::uint64_t diff = a.words_[w] ^ b.words_[w];
    if (diff != 0) {
      const int pos = std::countr_zero(diff);
      return ((a.words_[w] >> pos) & 1u) ? std::strong_ordering::greater
                                         : std::strong_ordering::less;
    }
  }
  return std::strong_ordering::equal;
}

void BitString::clear_tail() noexcept {
  if (nbits_ & 63) words_.back() &= (std::uint64_t{1} << (nbits_ & 63)) - 1;
}

BitString operator^(BitString a, const BitString& b) {
  a ^= b;
  return a;
}

BitString concat(const BitString& a, const BitString& b) {
  BitString out = a;
  out.append(b);
  return out;
}

BitString prefix(const BitString& r, std::size_t s) {
  if (s > r.size()) {
    throw RangeError("prefix length " + std::to_string(s) + " exceeds string length " +
                     std::to_string(r.size()));
  }
  std::vector<std::uint64_t> words(r.words().begin(), r.words().begin() + (s + 63) / 64);
  return BitString::from_words(std::move(words), s);
}

BitString substring(const BitString& r, std::size_t begin, std::size_t len) {
  if (begin > r.size() || len > r.size() - begin) throw RangeError("substring out of range");
  if ((begin & 63) == 0) {
    auto first = r.words().begin() + begin / 64;
    std::vector<std::uint64_t> words(first, first + (len + 63) / 64);
    return BitString::from_words(std::move(words), len);
  }
  const auto src = r.words();
  const std::size_t shift = begin & 63;
  std::vector<std::uint64_t> words((len + 63) / 64);
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::size_t lo = begin / 64 + w;
    std::uint64_t v = src[lo] >> shift;
    if (lo + 1 < src.size()) v |= src[lo + 1] << (64 - shift);
    words[w] = v;
  }
  return BitString::from_words(std::move(words), len);
}

std::size_t weight(const BitString& r) noexcept {
  std::size_t total = 0;
  for (std::uint64_t w : r.words()) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

bool inner_product(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw RangeError("inner product of different lengths");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) acc ^= a.words()[i] & b.words()[i];
  return std::popcount(acc) & 1;
}

BitMatrix::BitMatrix(std::vector<BitString> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.size() != rows_.front().size()) throw RangeError("matrix rows differ in length");
  }
}

BitMatrix BitMatrix::single(BitString row) { return BitMatrix({std::move(row)}); }

BitMatrix BitMatrix::from_flat(const BitString& flat, std::size_t nrows) {
  if (nrows == 0 || flat.size() % nrows != 0) {
    throw RangeError("flat length " + std::to_string(flat.size()) +
                     " is not a multiple of the row count");
  }
  const std::size_t width = flat.size() / nrows;
  std::vector<BitString> rows;
  rows.reserve(nrows);
  for (std::size_t i = 0; i < nrows; ++i) rows.push_back(substring(flat, i * width, width));
  return BitMatrix(std::move(rows));
}

BitMatrix BitMatrix::from_text(std::string_view text) {
  std::vector<BitString> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (!line.empty()) rows.push_back(BitString::from_string(line));
    pos = end + 1;
  }
  return BitMatrix(std::move(rows));
}

BitString BitMatrix::flatten() const {
  BitString out;
  for (const auto& r : rows_) out.append(r);
  return out;
}

std::string BitMatrix::to_text() const {
  std::string out;
  for (const auto& r : rows_) {
    out += r.to_string();
    out += '\n';
  }
  return out;
}

BitMatrix slice(const BitMatrix& x, std::size_t s) {
  if (s > x.row_length()) {
    throw RangeError("slice width " + std::to_string(s) + " exceeds row length " +
                     std::to_string(x.row_length()));
  }
  std::vector<BitString> rows;
  rows.reserve(x.rows());
  for (const auto& r : x.row_list()) rows.push_back(prefix(r, s));
  return BitMatrix(std::move(rows));
}

std::size_t longest_common_subsequence(const BitString& c, const BitString& c2) {
  std::vector<std::size_t> prev(c2.size() + 1, 0), cur(c2.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= c2.size(); ++j) {
      cur[j] = c[i - 1] == c2[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[c2.size()];
}

std::size_t edit_distance(const BitString& c, const BitString& c2) {
  return c.size() + c2.size() - 2 * longest_common_subsequence(c, c2);
}

std::size_t flip_table_index(const BitString& s) {
  return ((std::size_t{1} << s.size()) - 1) + static_cast<std::size_t>(s.to_uint());
}

BitString flip_table_string(std::size_t index) {
  std::size_t len = 0;
  while (index >= (std::size_t{1} << (len + 1)) - 1) ++len;
  return BitString::from_uint(index - ((std::size_t{1} << len) - 1), len);
}

std::vector<FlipEditCounts> flip_edit_table(const BitString& source, std::size_t max_len) {
  if (max_len > 20) throw RefusedError("flip-edit search bound above 20 bits");
  if (source.size() > max_len) throw RefusedError("source longer than the search bound");

  const std::size_t nstates = (std::size_t{1} << (max_len + 1)) - 1;
  constexpr std::size_t kUnset = ~std::size_t{0};
  std::vector<FlipEditCounts> best(nstates);
  std::vector<std::size_t> cost(nstates, kUnset), total(nstates, kUnset);

  // Strings are (length, value) with bit index 0 as the value's top bit.
  using Entry = std::tuple<std::size_t, std::size_t, std::size_t>;  // cost, total, state
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  const std::size_t start = flip_table_index(source);
  cost[start] = 0;
  total[start] = 0;
  queue.emplace(0, 0, start);

  auto relax = [&](std::size_t from, std::size_t to, std::size_t dn0, std::size_t dn1,
                   std::size_t dn2) {
    const std::size_t c = cost[from] + dn0 + dn2;
    const std::size_t t = total[from] + dn0 + dn1 + dn2;
    if (c < cost[to] || (c == cost[to] && t < total[to])) {
      cost[to] = c;
      total[to] = t;
      best[to] = {best[from].n0 + dn0, best[from].n1 + dn1, best[from].n2 + dn2};
      queue.emplace(c, t, to);
    }
  };

  while (!queue.empty()) {
    const auto [c, t, state] = queue.top();
    queue.pop();
    if (c != cost[state] || t != total[state]) continue;
    std::size_t len = 0;
    while (state >= (std::size_t{1} << (len + 1)) - 1) ++len;
    const std::size_t value = state - ((std::size_t{1} << len) - 1);
    auto index_of = [](std::size_t l, std::size_t v) { return ((std::size_t{1} << l) - 1) + v; };

    for (std::size_t p = 0; p < len; ++p) {
      // Bit index p sits at value bit (len - 1 - p).
      const std::size_t vb = len - 1 - p;
      const bool bit = (value >> vb) & 1u;
      relax(state, index_of(len, value ^ (std::size_t{1} << vb)), bit ? 0 : 1, bit ? 1 : 0, 0);
      const std::size_t high = value >> (vb + 1);
      const std::size_t low = value & ((std::size_t{1} << vb) - 1);
      relax(state, index_of(len - 1, (high << vb) | low), 0, 0, 1);
    }
    if (len < max_len) {
      for (std::size_t p = 0; p <= len; ++p) {
        const std::size_t vb = len - p;  // bits below the insertion point
        const std::size_t high = value >> vb;
        const std::size_t low = value & ((std::size_t{1} << vb) - 1);
        for (std::size_t b = 0; b < 2; ++b) {
          relax(state, index_of(len + 1, (((high << 1) | b) << vb) | low), 0, 0, 1);
        }
      }
    }
  }
  return best;
}

FlipEditCounts min_edit_ops_with_flips(const BitString& c, const BitString& c2,
                                       std::size_t bound) {
  if (c.size() > bound || c2.size() > bound) {
    throw RefusedError("min_edit_ops_with_flips: inputs exceed the " + std::to_string(bound) +
                       "-bit exhaustive bound");
  }
  const std::size_t max_len = std::max(c.size(), c2.size());
  return flip_edit_table(c, max_len)[flip_table_index(c2)];
}

}  // namespace amplify
