#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amplify {

/// Finite bit sequence. Index 0 is the leftmost bit; prefixes take low
/// indices. Storage packs bit i into word i / 64 at position i % 64, and
/// bits past size() are always zero so word-wise comparison is exact.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t nbits, bool value = false);

  /// Parses an ASCII string of '0' and '1'. Throws FormatError otherwise.
  static BitString from_string(std::string_view text);
  /// Low `nbits` bits of `value`, most significant first (bit nbits-1 of
  /// `value` lands at index 0).
  static BitString from_uint(std::uint64_t value, std::size_t nbits);
  static BitString from_words(std::vector<std::uint64_t> words, std::size_t nbits);

  std::size_t size() const noexcept { return nbits_; }
  bool empty() const noexcept { return nbits_ == 0; }

  bool operator[](std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  bool at(std::size_t i) const;
  void set(std::size_t i, bool value);
  void flip(std::size_t i);
  void push_back(bool value);
  void append(const BitString& other);

  /// Inverse of from_uint; requires size() <= 64.
  std::uint64_t to_uint() const;
  std::string to_string() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  BitString& operator^=(const BitString& other);

  friend bool operator==(const BitString& a, const BitString& b) noexcept {
    return a.nbits_ == b.nbits_ && a.words_ == b.words_;
  }
  friend std::strong_ordering operator<=>(const BitString& a, const BitString& b);

 private:
  void clear_tail() noexcept;

  std::vector<std::uint64_t> words_;
  std::size_t nbits_ = 0;
};

BitString operator^(BitString a, const BitString& b);
BitString concat(const BitString& a, const BitString& b);

/// First `s` bits of `r`. Throws RangeError when s > |r|.
BitString prefix(const BitString& r, std::size_t s);
/// Bits [begin, begin + len) of `r`. Throws RangeError when out of range.
BitString substring(const BitString& r, std::size_t begin, std::size_t len);
/// Number of ones.
std::size_t weight(const BitString& r) noexcept;
/// GF(2) inner product.
bool inner_product(const BitString& a, const BitString& b);

/// Rows of equal length.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::vector<BitString> rows);
  static BitMatrix single(BitString row);
  /// Splits `flat` into `nrows` equal rows. Throws RangeError when the
  /// length is not a multiple of `nrows`.
  static BitMatrix from_flat(const BitString& flat, std::size_t nrows);
  /// One row per line (blank lines ignored).
  static BitMatrix from_text(std::string_view text);

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t row_length() const noexcept { return rows_.empty() ? 0 : rows_.front().size(); }
  std::size_t total_bits() const noexcept { return rows() * row_length(); }
  const BitString& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<BitString>& row_list() const noexcept { return rows_; }

  BitString flatten() const;
  std::string to_text() const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::vector<BitString> rows_;
};

/// Row-wise prefix of width `s`.
BitMatrix slice(const BitMatrix& x, std::size_t s);

/// Insert/delete edit distance: |c| + |c2| - 2 LCS(c, c2).
std::size_t edit_distance(const BitString& c, const BitString& c2);
std::size_t longest_common_subsequence(const BitString& c, const BitString& c2);

/// Operation counts of a tampering sequence: n0 counts 0->1 changes, n1
/// counts 1->0 changes, n2 counts insertions and deletions.
struct FlipEditCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  std::size_t charged() const noexcept { return n0 + n2; }
  std::size_t total() const noexcept { return n0 + n1 + n2; }
  friend bool operator==(const FlipEditCounts&, const FlipEditCounts&) = default;
};

inline constexpr std::size_t kFlipSearchDefaultBound = 12;

/// Minimises n0 + n2 over all operation sequences turning `c` into `c2`
/// (ties broken by fewest total operations) with a shortest-path search
/// over every bit string up to the search bound. Throws RefusedError when
/// either input is longer than `bound`.
FlipEditCounts min_edit_ops_with_flips(const BitString& c, const BitString& c2,
                                       std::size_t bound = kFlipSearchDefaultBound);

/// All-targets variant of min_edit_ops_with_flips: the optimum from
/// `source` to every string of length <= max_len, indexed by
/// flip_table_index. Intermediate strings never exceed max_len, which is
/// exact whenever max_len >= max(|source|, |target|).
std::vector<FlipEditCounts> flip_edit_table(const BitString& source, std::size_t max_len);
std::size_t flip_table_index(const BitString& s);
BitString flip_table_string(std::size_t index);

}  // namespace amplify
