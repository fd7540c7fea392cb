#include "amplify/entropy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "amplify/error.hpp"

namespace amplify {
namespace {

SourceSpec spec_of(std::size_t n, double k, SourceFamily f, std::uint64_t seed = 5) {
  SourceSpec s;
  s.n = n;
  s.k = k;
  s.family = f;
  s.seed = seed;
  return s;
}

double empirical_min_entropy(const SourceSpec& spec, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::uint64_t, std::size_t> counts;
  for (std::size_t i = 0; i < samples; ++i) counts[sample(spec, rng).to_uint()]++;
  std::size_t top = 0;
  for (const auto& [_, c] : counts) top = std::max(top, c);
  return -std::log2(static_cast<double>(top) / static_cast<double>(samples));
}

TEST(Sample, FullEntropyFlatCoversEverything) {
  const SourceSpec s = spec_of(6, 6, SourceFamily::flat);
  EXPECT_EQ(to_table(s).support_size(), 64u);
}

TEST(Sample, FixedZeroBitFixingIsAPointMass) {
  SourceSpec s = spec_of(5, 0, SourceFamily::bit_fixing);
  for (std::size_t i = 0; i < 5; ++i) s.fixed.emplace_back(i, false);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample(s, rng), BitString(5));
}

TEST(Sample, FlatDrawsStayInTheSeededSubset) {
  const SourceSpec s = spec_of(8, 3, SourceFamily::flat);
  const auto support = flat_support(s);
  ASSERT_EQ(support.size(), 8u);
  std::set<std::string> members;
  for (const auto& p : support) members.insert(p.to_string());
  EXPECT_EQ(members.size(), 8u);
  Rng rng(9);
  std::set<std::string> seen;
  for (int i = 0; i < 400; ++i) {
    const auto draw = sample(s, rng).to_string();
    EXPECT_TRUE(members.count(draw)) << draw;
    seen.insert(draw);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Sample, FlatWorksAtLargeWidth) {
  const SourceSpec s = spec_of(4096, 700.3, SourceFamily::flat);
  Rng rng(2);
  const BitString a = sample(s, rng), b = sample(s, rng);
  EXPECT_EQ(a.size(), 4096u);
  EXPECT_NE(a, b);
}

TEST(Sample, EmpiricalMinEntropyMatchesFamilies) {
  // 2^(n+6) draws; supports are small enough for the 0.1-bit tolerance to be
  // statistically meaningful.
  const std::size_t n = 10;
  const std::size_t draws = std::size_t{1} << (n + 6);
  const SourceSpec flat = spec_of(n, 4, SourceFamily::flat);
  EXPECT_NEAR(empirical_min_entropy(flat, draws, 1), flat.analytic_min_entropy(), 0.1);
  const SourceSpec fixing = spec_of(n, 3.5, SourceFamily::bit_fixing);
  EXPECT_NEAR(empirical_min_entropy(fixing, draws, 2), 4.0, 0.1);
  const SourceSpec biased = spec_of(n, 4, SourceFamily::biased_iid);
  EXPECT_NEAR(empirical_min_entropy(biased, draws, 3), biased.analytic_min_entropy(), 0.1);
  EXPECT_NEAR(biased.analytic_min_entropy(), 4.0, 1e-9);
}

TEST(SourceSpec, Validation) {
  EXPECT_THROW(spec_of(4, 5, SourceFamily::flat).validate(), ConfigError);
  SourceSpec biased = spec_of(8, 6, SourceFamily::biased_iid);
  biased.bias = 0.1;
  EXPECT_THROW(biased.validate(), ConfigError);
  SourceSpec table = spec_of(2, 1, SourceFamily::explicit_table);
  EXPECT_THROW(table.validate(), ConfigError);
  table.table = std::make_shared<DistributionTable>(DistributionTable::uniform(2));
  EXPECT_NO_THROW(table.validate());
}

TEST(Table, TablesMatchFamilies) {
  const SourceSpec fixing = spec_of(8, 3, SourceFamily::bit_fixing);
  EXPECT_DOUBLE_EQ(min_entropy(to_table(fixing)), 3.0);
  const SourceSpec biased = spec_of(8, 2, SourceFamily::biased_iid);
  EXPECT_NEAR(min_entropy(to_table(biased)), 2.0, 1e-9);
}

TEST(MinEntropy, Examples) {
  EXPECT_DOUBLE_EQ(min_entropy(DistributionTable::point(3, 5)), 0.0);
  EXPECT_DOUBLE_EQ(min_entropy(DistributionTable::uniform(1)), 1.0);
  EXPECT_DOUBLE_EQ(min_entropy(DistributionTable(2, {{0, 0.5}, {1, 0.25}, {2, 0.25}})), 1.0);
  EXPECT_THROW(min_entropy(DistributionTable()), ConfigError);
}

TEST(StatisticalDistance, Examples) {
  const auto u = DistributionTable::uniform(1);
  EXPECT_DOUBLE_EQ(statistical_distance(u, u), 0.0);
  EXPECT_DOUBLE_EQ(statistical_distance(u, DistributionTable::point(1, 0)), 0.5);
  EXPECT_DOUBLE_EQ(statistical_distance(DistributionTable(1, {{0, 0.75}, {1, 0.25}}), u), 0.25);
  EXPECT_THROW(statistical_distance(u, DistributionTable::uniform(2)), ConfigError);
}

TEST(StatisticalDistance, TriangleAndBound) {
  Rng rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_table = [&] {
    std::vector<std::pair<std::uint64_t, double>> m;
    double total = 0.0;
    for (std::uint64_t v = 0; v < 8; ++v) {
      const double x = unit(rng) < 0.3 ? 0.0 : unit(rng);
      m.emplace_back(v, x);
      total += x;
    }
    if (total == 0.0) return DistributionTable::point(3, 0);
    for (auto& e : m) e.second /= total;
    return DistributionTable(3, m);
  };
  for (int i = 0; i < 200; ++i) {
    const auto a = random_table(), b = random_table(), c = random_table();
    EXPECT_LE(statistical_distance(a, b), 1.0 + 1e-12);
    EXPECT_LE(statistical_distance(a, c),
              statistical_distance(a, b) + statistical_distance(b, c) + 1e-12);
  }
}

TEST(StatisticalDistance, EqualsMaxOverSubsets) {
  const DistributionTable a(2, {{0, 0.1}, {1, 0.4}, {2, 0.3}, {3, 0.2}});
  const DistributionTable b(2, {{0, 0.25}, {1, 0.25}, {2, 0.25}, {3, 0.25}});
  double best = 0.0;
  for (unsigned subset = 0; subset < 16; ++subset) {
    double da = 0.0, db = 0.0;
    for (std::uint64_t v = 0; v < 4; ++v) {
      if ((subset >> v) & 1u) da += a.mass(v), db += b.mass(v);
    }
    best = std::max(best, std::abs(da - db));
  }
  EXPECT_NEAR(statistical_distance(a, b), best, 1e-12);
}

TEST(Table, ParsesTwoColumnFixture) {
  const auto t = DistributionTable::parse("# comment\n00 1/2\n01 0.25\n11 1/4\n");
  EXPECT_EQ(t.n(), 2u);
  EXPECT_DOUBLE_EQ(t.mass(0b11), 0.25);
  EXPECT_EQ(DistributionTable::parse(t.to_text()).entries(), t.entries());
  EXPECT_THROW(DistributionTable::parse("00 0.5\n"), ConfigError);
  EXPECT_THROW(DistributionTable::parse("00 0.5\n1 0.5\n"), FormatError);
}

TEST(Audit, ConstantYPassesEverything) {
  // Y is the last bit and always 0.
  std::vector<std::pair<std::uint64_t, double>> m;
  for (std::uint64_t x = 0; x < 8; ++x) m.emplace_back(x << 1, 1.0 / 8);
  const auto r = conditional_minentropy_audit(DistributionTable(4, m), 3, 0.25);
  EXPECT_DOUBLE_EQ(r.fraction_passing, 1.0);
  EXPECT_DOUBLE_EQ(r.threshold, 3.0 - 0.0 - 2.0);
}

TEST(Audit, UniformXWithFirstBitRevealed) {
  std::vector<std::pair<std::uint64_t, double>> m;
  for (std::uint64_t x = 0; x < 16; ++x) m.emplace_back((x << 1) | (x >> 3), 1.0 / 16);
  const auto r = conditional_minentropy_audit(DistributionTable(5, m), 4, 0.5);
  EXPECT_DOUBLE_EQ(r.threshold, 2.0);
  EXPECT_DOUBLE_EQ(r.fraction_passing, 1.0);
}

TEST(Audit, SkewedTableNeverBelowOneMinusEps) {
  // X 3 bits, Y 2 bits. y = 0 pins X to a single value; other y spread.
  std::vector<std::pair<std::uint64_t, double>> m;
  m.emplace_back((5u << 2) | 0u, 0.3);
  for (std::uint64_t x = 0; x < 8; ++x) {
    for (std::uint64_t y = 1; y < 4; ++y) m.emplace_back((x << 2) | y, 0.7 / 24);
  }
  const DistributionTable joint(5, m);
  for (double eps : {0.05, 0.1, 0.3, 0.5, 0.9}) {
    const auto r = conditional_minentropy_audit(joint, 3, eps);
    EXPECT_GE(r.fraction_passing, 1.0 - eps - 1e-12) << eps;
  }
}

}  // namespace
}  // namespace amplify

namespace amplify {
namespace {

std::string read_fixture(const char* name) {
  std::ifstream in(std::string(AMPLIFY_FIXTURE_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(DistributionFixture, HandComputedValues) {
  const DistributionTable d = DistributionTable::parse(read_fixture("skewed4.dist"));
  EXPECT_EQ(d.n(), 4u);
  EXPECT_EQ(d.support_size(), 6u);
  EXPECT_DOUBLE_EQ(min_entropy(d), 2.0);
  // Two points at 1/4, four at 1/8 and ten absent, each against 1/16:
  // (2 * 3/16 + 4 * 1/16 + 10 * 1/16) / 2 = 5/8.
  EXPECT_DOUBLE_EQ(statistical_distance(d, DistributionTable::uniform(4)), 0.625);
  EXPECT_EQ(DistributionTable::parse(d.to_text()).entries(), d.entries());
}

}  // namespace
}  // namespace amplify
