#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amplify/bits.hpp"
#include "amplify/random.hpp"

namespace amplify {

inline constexpr std::size_t kMaxTableBits = 24;

/// Explicit distribution over n-bit strings, n <= 24. Entries are sorted by
/// value (bit index 0 is the most significant bit of the value) and unique.
class DistributionTable {
 public:
  DistributionTable() = default;
  /// Validates non-negative masses summing to 1 within 1e-12. Duplicate
  /// values are merged; zero masses are dropped.
  DistributionTable(std::size_t n, std::vector<std::pair<std::uint64_t, double>> masses);

  static DistributionTable uniform(std::size_t n);
  static DistributionTable uniform_on(std::size_t n, std::vector<std::uint64_t> support);
  static DistributionTable point(std::size_t n, std::uint64_t value);
  /// Two columns per line: bit string and mass. '#' starts a comment.
  static DistributionTable parse(std::string_view text);
  std::string to_text() const;

  std::size_t n() const noexcept { return n_; }
  const std::vector<std::pair<std::uint64_t, double>>& entries() const noexcept { return entries_; }
  std::size_t support_size() const noexcept { return entries_.size(); }
  double mass(std::uint64_t value) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<std::uint64_t, double>> entries_;
};

double min_entropy(const DistributionTable& d);
double statistical_distance(const DistributionTable& d1, const DistributionTable& d2);

struct AuditResult {
  double fraction_passing = 0.0;
  double threshold = 0.0;
};

/// Joint table over (x, y) where x is the first `x_bits` bits of each entry.
/// The range of Y is the set of y values with positive mass.
AuditResult conditional_minentropy_audit(const DistributionTable& joint, std::size_t x_bits,
                                         double eps);

enum class SourceFamily { flat, bit_fixing, biased_iid, explicit_table };

std::string_view family_name(SourceFamily f);
SourceFamily parse_family(std::string_view name);

/// Declarative (n, k)-source. `seed` fixes the family's hidden structure
/// (flat subset, fixed positions and values, noise mask) for replay.
struct SourceSpec {
  std::size_t n = 0;
  double k = 0.0;
  SourceFamily family = SourceFamily::flat;
  std::uint64_t seed = 0;
  /// Biased-iid probability of a noise bit being 1. Negative selects the
  /// largest bias meeting k: p = 1 - 2^(-k/n).
  double bias = -1.0;
  /// Bit-fixing positions and values. Empty derives n - ceil(k) of them
  /// from `seed`.
  std::vector<std::pair<std::size_t, bool>> fixed;
  std::shared_ptr<const DistributionTable> table;

  void validate() const;
  /// Realised min-entropy: ceil(k) for flat and bit-fixing sources,
  /// n * -log2(max(p, 1 - p)) for biased-iid, exact for tables.
  double analytic_min_entropy() const;
  double effective_bias() const;
  std::size_t support_exponent() const;
};

/// One draw from the family.
BitString sample(const SourceSpec& spec, Rng& rng);

/// Exact distribution of the family, n <= 24.
DistributionTable to_table(const SourceSpec& spec);

/// The 2^ceil(k) support points of a flat source in index order, requiring
/// ceil(k) <= 24.
std::vector<BitString> flat_support(const SourceSpec& spec);

/// Keyed bijection on n-bit strings used to place a flat source's support.
BitString flat_point(const SourceSpec& spec, const BitString& index);

}  // namespace amplify
