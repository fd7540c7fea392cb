#include "amplify/entropy.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "amplify/error.hpp"

namespace amplify {

namespace {

constexpr double kMassTolerance = 1e-12;

double parse_mass(std::string_view text) {
  auto to_double = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size()) throw FormatError("bad mass");
      return v;
    } catch (const std::logic_error&) {
      throw FormatError("bad probability mass '" + std::string(text) + "'");
    }
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return to_double(text.substr(0, slash)) / to_double(text.substr(slash + 1));
  }
  return to_double(text);
}

std::uint64_t to_value(const BitString& s) { return s.to_uint(); }

std::vector<std::pair<std::size_t, bool>> fixed_positions(const SourceSpec& spec) {
  if (!spec.fixed.empty()) return spec.fixed;
  Rng rng(derive_seed(spec.seed, "bit-fixing", 0));
  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t nfixed = spec.n - spec.support_exponent();
  std::vector<std::pair<std::size_t, bool>> out;
  for (std::size_t i = 0; i < nfixed; ++i) out.emplace_back(order[i], rng() & 1u);
  std::sort(out.begin(), out.end());
  return out;
}

BitString biased_mask(const SourceSpec& spec) {
  Rng rng(derive_seed(spec.seed, "biased-mask", 0));
  return random_bits(rng, spec.n);
}

}  // namespace

DistributionTable::DistributionTable(std::size_t n,
                                     std::vector<std::pair<std::uint64_t, double>> masses)
    : n_(n) {
  if (n > kMaxTableBits) {
    throw RefusedError("distribution tables are limited to " + std::to_string(kMaxTableBits) +
                       " bits");
  }
  std::sort(masses.begin(), masses.end());
  double total = 0.0;
  for (const auto& [value, mass] : masses) {
    if (mass < 0.0 || !std::isfinite(mass)) throw ConfigError("negative or non-finite mass");
    if (n < 64 && value >> n) throw RangeError("table value wider than n bits");
    total += mass;
    if (mass == 0.0) continue;
    if (!entries_.empty() && entries_.back().first == value) {
      entries_.back().second += mass;
    } else {
      entries_.emplace_back(value, mass);
    }
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ConfigError("masses sum to " + std::to_string(total) + ", expected 1");
  }
}

DistributionTable DistributionTable::uniform(std::size_t n) {
  if (n > kMaxTableBits) throw RefusedError("uniform table above the enumeration bound");
  std::vector<std::uint64_t> all(std::size_t{1} << n);
  std::iota(all.begin(), all.end(), std::uint64_t{0});
  return uniform_on(n, std::move(all));
}

DistributionTable DistributionTable::uniform_on(std::size_t n, std::vector<std::uint64_t> support) {
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (support.empty()) throw ConfigError("empty support");
  const double mass = 1.0 / static_cast<double>(support.size());
  std::vector<std::pair<std::uint64_t, double>> masses;
  masses.reserve(support.size());
  for (auto v : support) masses.emplace_back(v, mass);
  return DistributionTable(n, std::move(masses));
}

DistributionTable DistributionTable::point(std::size_t n, std::uint64_t value) {
  return DistributionTable(n, {{value, 1.0}});
}

DistributionTable DistributionTable::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<std::size_t> n;
  std::vector<std::pair<std::uint64_t, double>> masses;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string bits, mass;
    if (!(fields >> bits)) continue;
    if (!(fields >> mass)) {
      throw FormatError("line " + std::to_string(lineno) + ": expected '<bits> <mass>'");
    }
    const BitString s = BitString::from_string(bits);
    if (n && *n != s.size()) throw FormatError("line " + std::to_string(lineno) + ": width changes");
    n = s.size();
    if (s.size() > kMaxTableBits) throw RefusedError("table wider than the enumeration bound");
    masses.emplace_back(to_value(s), parse_mass(mass));
  }
  if (!n) throw FormatError("distribution table has no entries");
  return DistributionTable(*n, std::move(masses));
}

std::string DistributionTable::to_text() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [value, mass] : entries_) {
    out << BitString::from_uint(value, n_).to_string() << ' ' << mass << '\n';
  }
  return out.str();
}

double DistributionTable::mass(std::uint64_t value) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(value, -1.0));
  return it != entries_.end() && it->first == value ? it->second : 0.0;
}

double min_entropy(const DistributionTable& d) {
  if (d.entries().empty()) throw ConfigError("min-entropy of an empty support");
  double top = 0.0;
  for (const auto& e : d.entries()) top = std::max(top, e.second);
  return -std::log2(top);
}

double statistical_distance(const DistributionTable& d1, const DistributionTable& d2) {
  if (d1.n() != d2.n()) throw ConfigError("statistical distance of tables over different n");
  const auto& a = d1.entries();
  const auto& b = d2.entries();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      sum += a[i++].second;
    } else if (i == a.size() || b[j].first < a[i].first) {
      sum += b[j++].second;
    } else {
      sum += std::abs(a[i++].second - b[j++].second);
    }
  }
  return 0.5 * sum;
}

AuditResult conditional_minentropy_audit(const DistributionTable& joint, std::size_t x_bits,
                                         double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (x_bits > joint.n()) throw RangeError("x width exceeds the joint width");
  const std::size_t y_bits = joint.n() - x_bits;
  const std::uint64_t y_mask = y_bits == 0 ? 0 : (std::uint64_t{1} << y_bits) - 1;

  std::map<std::uint64_t, double> px;
  struct YStats {
    double mass = 0.0;
    double top = 0.0;
  };
  std::map<std::uint64_t, YStats> py;
  for (const auto& [value, mass] : joint.entries()) {
    px[value >> y_bits] += mass;
    auto& y = py[value & y_mask];
    y.mass += mass;
    y.top = std::max(y.top, mass);
  }
  double x_top = 0.0;
  for (const auto& [_, mass] : px) x_top = std::max(x_top, mass);

  AuditResult result;
  result.threshold =
      -std::log2(x_top) - std::log2(static_cast<double>(py.size())) - std::log2(1.0 / eps);
  for (const auto& [_, y] : py) {
    const double h = -std::log2(y.top / y.mass);
    if (h >= result.threshold - 1e-12) result.fraction_passing += y.mass;
  }
  return result;
}

std::string_view family_name(SourceFamily f) {
  switch (f) {
    case SourceFamily::flat:
      return "flat";
    case SourceFamily::bit_fixing:
      return "bit-fixing";
    case SourceFamily::biased_iid:
      return "biased-iid";
    case SourceFamily::explicit_table:
      return "table";
  }
  return "?";
}

SourceFamily parse_family(std::string_view name) {
  if (name == "flat") return SourceFamily::flat;
  if (name == "bit-fixing") return SourceFamily::bit_fixing;
  if (name == "biased-iid") return SourceFamily::biased_iid;
  if (name == "table") return SourceFamily::explicit_table;
  throw ConfigError("unknown source family '" + std::string(name) + "'");
}

std::size_t SourceSpec::support_exponent() const {
  return static_cast<std::size_t>(std::ceil(k - 1e-12));
}

double SourceSpec::effective_bias() const {
  if (bias >= 0.0) return bias;
  return n == 0 ? 0.0 : 1.0 - std::exp2(-k / static_cast<double>(n));
}

void SourceSpec::validate() const {
  if (!(k >= 0.0) || k > static_cast<double>(n)) {
    throw ConfigError("source needs 0 <= k <= n (k = " + std::to_string(k) +
                      ", n = " + std::to_string(n) + ")");
  }
  switch (family) {
    case SourceFamily::flat:
      break;
    case SourceFamily::bit_fixing: {
      const auto f = fixed_positions(*this);
      if (f.size() != n - support_exponent()) {
        throw ConfigError("bit-fixing source must fix exactly n - ceil(k) positions");
      }
      std::vector<bool> seen(n, false);
      for (const auto& [pos, _] : f) {
        if (pos >= n || seen[pos]) throw ConfigError("bad fixed position");
        seen[pos] = true;
      }
      break;
    }
    case SourceFamily::biased_iid: {
      const double p = effective_bias();
      if (p < 0.0 || p > 1.0) throw ConfigError("bias outside [0, 1]");
      if (analytic_min_entropy() < k - 1e-9) {
        throw ConfigError("bias too strong for the claimed min-entropy");
      }
      break;
    }
    case SourceFamily::explicit_table:
      if (!table) throw ConfigError("table source without a table");
      if (table->n() != n) throw ConfigError("table width differs from n");
      if (min_entropy(*table) < k - 1e-9) throw ConfigError("table min-entropy below k");
      break;
  }
}

double SourceSpec::analytic_min_entropy() const {
  switch (family) {
    case SourceFamily::flat:
    case SourceFamily::bit_fixing:
      return static_cast<double>(support_exponent());
    case SourceFamily::biased_iid: {
      const double p = effective_bias();
      return static_cast<double>(n) * -std::log2(std::max(p, 1.0 - p));
    }
    case SourceFamily::explicit_table:
      return min_entropy(*table);
  }
  return 0.0;
}

BitString flat_point(const SourceSpec& spec, const BitString& index) {
  if (index.size() != spec.n) throw RangeError("flat index must have n bits");
  const std::size_t left = spec.n / 2;
  const std::size_t right = spec.n - left;
  const PrfKey key = prf_key(spec.seed, "flat-subset");
  BitString a = prefix(index, left);
  BitString b = substring(index, left, right);
  // Alternating unbalanced Feistel rounds; each round is invertible.
  for (std::uint64_t round = 0; round < 4; round += 2) {
    a ^= PrfStream(key).absorb(round).absorb(b).expand(left);
    b ^= PrfStream(key).absorb(round + 1).absorb(a).expand(right);
  }
  return concat(a, b);
}

std::vector<BitString> flat_support(const SourceSpec& spec) {
  const std::size_t e = spec.support_exponent();
  if (e > kMaxTableBits) throw RefusedError("flat support above the enumeration bound");
  std::vector<BitString> out;
  out.reserve(std::size_t{1} << e);
  for (std::uint64_t j = 0; j < (std::uint64_t{1} << e); ++j) {
    BitString index(spec.n - e);
    index.append(BitString::from_uint(j, e));
    out.push_back(flat_point(spec, index));
  }
  return out;
}

BitString sample(const SourceSpec& spec, Rng& rng) {
  switch (spec.family) {
    case SourceFamily::flat: {
      const std::size_t e = spec.support_exponent();
      BitString index(spec.n - e);
      index.append(random_bits(rng, e));
      return flat_point(spec, index);
    }
    case SourceFamily::bit_fixing: {
      BitString out = random_bits(rng, spec.n);
      for (const auto& [pos, value] : fixed_positions(spec)) out.set(pos, value);
      return out;
    }
    case SourceFamily::biased_iid: {
      std::bernoulli_distribution noise(spec.effective_bias());
      BitString out = biased_mask(spec);
      for (std::size_t i = 0; i < spec.n; ++i) {
        if (noise(rng)) out.flip(i);
      }
      return out;
    }
    case SourceFamily::explicit_table: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double r = u(rng);
      for (const auto& [value, mass] : spec.table->entries()) {
        if (r < mass) return BitString::from_uint(value, spec.n);
        r -= mass;
      }
      return BitString::from_uint(spec.table->entries().back().first, spec.n);
    }
  }
  throw ConfigError("unknown source family");
}

DistributionTable to_table(const SourceSpec& spec) {
  spec.validate();
  if (spec.n > kMaxTableBits) throw RefusedError("source wider than the enumeration bound");
  switch (spec.family) {
    case SourceFamily::flat: {
      std::vector<std::uint64_t> support;
      for (const auto& s : flat_support(spec)) support.push_back(s.to_uint());
      return DistributionTable::uniform_on(spec.n, std::move(support));
    }
    case SourceFamily::bit_fixing: {
      const auto fixed = fixed_positions(spec);
      std::vector<bool> is_fixed(spec.n, false);
      std::uint64_t base = 0;
      for (const auto& [pos, value] : fixed) {
        is_fixed[pos] = true;
        if (value) base |= std::uint64_t{1} << (spec.n - 1 - pos);
      }
      std::vector<std::size_t> free_bits;
      for (std::size_t i = 0; i < spec.n; ++i) {
        if (!is_fixed[i]) free_bits.push_back(spec.n - 1 - i);
      }
      std::vector<std::uint64_t> support;
      for (std::uint64_t j = 0; j < (std::uint64_t{1} << free_bits.size()); ++j) {
        std::uint64_t v = base;
        for (std::size_t b = 0; b < free_bits.size(); ++b) {
          if ((j >> b) & 1u) v |= std::uint64_t{1} << free_bits[b];
        }
        support.push_back(v);
      }
      return DistributionTable::uniform_on(spec.n, std::move(support));
    }
    case SourceFamily::biased_iid: {
      const double p = spec.effective_bias();
      const std::uint64_t mask = biased_mask(spec).to_uint();
      std::vector<std::pair<std::uint64_t, double>> masses;
      masses.reserve(std::size_t{1} << spec.n);
      for (std::uint64_t noise = 0; noise < (std::uint64_t{1} << spec.n); ++noise) {
        const int ones = std::popcount(noise);
        const double mass =
            std::pow(p, ones) * std::pow(1.0 - p, static_cast<double>(spec.n) - ones);
        masses.emplace_back(noise ^ mask, mass);
      }
      // Renormalise rounding drift from the products.
      double total = 0.0;
      for (const auto& m : masses) total += m.second;
      for (auto& m : masses) m.second /= total;
      return DistributionTable(spec.n, std::move(masses));
    }
    case SourceFamily::explicit_table:
      return *spec.table;
  }
  throw ConfigError("unknown source family");
}

}  // namespace amplify
