#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amplify/bits.hpp"

namespace amplify {

/// 0 -> 01, 1 -> 10. The output always has weight |m|.
BitString constant_weight_encode(const BitString& m);
/// Inverse of constant_weight_encode; nullopt for odd length or a 00/11 pair.
std::optional<BitString> constant_weight_decode(const BitString& c);

inline constexpr std::size_t kMaxCodeMessageBits = 12;

/// Edit distance for strings of at most 64 bits via a bit-parallel LCS.
std::size_t edit_distance_small(std::uint64_t a, std::size_t na, std::uint64_t b, std::size_t nb);

struct CodeVerification {
  std::size_t codewords = 0;
  std::size_t weight_violations = 0;
  std::size_t length_violations = 0;
  std::size_t distance_violations = 0;
  std::size_t duplicate_codewords = 0;
  std::size_t min_distance = 0;

  bool ok(std::size_t expected_codewords) const noexcept {
    return codewords == expected_codewords && weight_violations == 0 && length_violations == 0 &&
           distance_violations == 0 && duplicate_codewords == 0;
  }
};

/// Constant-weight error-detecting code for insert/delete errors. Entry i is
/// the codeword of the lambda_m-bit message whose value is i.
class EditCodebook {
 public:
  EditCodebook(std::size_t lambda_m, std::size_t lambda_c, double e, std::size_t weight,
               std::vector<BitString> entries);

  std::size_t lambda_m() const noexcept { return lambda_m_; }
  std::size_t lambda_c() const noexcept { return lambda_c_; }
  double e() const noexcept { return e_; }
  std::size_t weight() const noexcept { return weight_; }
  const std::vector<BitString>& entries() const noexcept { return entries_; }
  /// ceil(e * lambda_c).
  std::size_t required_distance() const noexcept;

  BitString encode(const BitString& m) const;
  std::optional<BitString> decode_exact(const BitString& c) const;

  /// Exhaustive check: size, lengths, weight, distinctness and pairwise
  /// edit distance >= e * lambda_c.
  CodeVerification verify() const;

  std::string to_text() const;
  /// Parses and re-verifies; throws FormatError when verification fails.
  static EditCodebook parse(std::string_view text);

  friend bool operator==(const EditCodebook&, const EditCodebook&) = default;

 private:
  std::size_t lambda_m_;
  std::size_t lambda_c_;
  double e_;
  std::size_t weight_;
  std::vector<BitString> entries_;
};

/// Greedy search did not reach 2^lambda_m codewords.
class CodeGenerationError : public std::runtime_error {
 public:
  CodeGenerationError(const std::string& what, std::size_t achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

/// Admits weight-(lambda_c/2) candidates in a fixed pseudorandom order when
/// their edit distance to every admitted word is >= e * lambda_c. Requires
/// lambda_m <= 12 and lambda_c = lambda_m / rho integral and even.
EditCodebook edit_code_generate(std::size_t lambda_m, double e, double rho);

/// Loads `dir/edit-<lambda_m>-<e>-<rho>.code` when present and valid,
/// otherwise generates and writes it.
EditCodebook edit_code_cached(const std::filesystem::path& dir, std::size_t lambda_m, double e,
                              double rho);

}  // namespace amplify
