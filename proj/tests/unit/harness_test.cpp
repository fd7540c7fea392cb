#include "amplify/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "amplify/error.hpp"

namespace amplify {
namespace {

ExperimentConfig small_auth() {
  ExperimentConfig c;
  c.name = "unit";
  c.protocol = ProtocolKind::auth;
  c.trials = 20;
  c.workers = 1;
  c.n = {128};
  c.k = {"n"};
  c.t = {4};
  c.ell = {"2t"};
  c.strategies = {"passive"};
  return c;
}

TEST(ConfigFile, ParsesSectionsAndComments) {
  const ConfigFile f = ConfigFile::parse(
      "# leading comment\n[experiment]\nname = demo  # trailing\ntrials=5\n\n[grid]\nn = 64, 128\n");
  ASSERT_EQ(f.sections().size(), 2u);
  EXPECT_EQ(f.get("experiment", "name"), "demo");
  EXPECT_EQ(f.get("grid", "n"), "64, 128");
  EXPECT_FALSE(f.get("grid", "t").has_value());
  EXPECT_THROW(ConfigFile::parse("key = 1\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a]\njunk\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a\n"), ConfigError);
}

TEST(ConfigFile, ScaledExpressions) {
  EXPECT_DOUBLE_EQ(eval_scaled("12", 'n', 99), 12);
  EXPECT_DOUBLE_EQ(eval_scaled("n", 'n', 99), 99);
  EXPECT_DOUBLE_EQ(eval_scaled("n^0.5", 'n', 16), 4);
  EXPECT_DOUBLE_EQ(eval_scaled("4t", 't', 3), 12);
  EXPECT_DOUBLE_EQ(eval_scaled("0.5*n", 'n', 10), 5);
  EXPECT_DOUBLE_EQ(eval_scaled("n/4", 'n', 10), 2.5);
  EXPECT_THROW(eval_scaled("n+1", 'n', 1), ConfigError);
  EXPECT_THROW(eval_scaled("x", 'n', 1), ConfigError);
}

TEST(Experiment, ParseExpandsTheGrid) {
  const ExperimentConfig c = parse_experiment(ConfigFile::parse(R"(
[experiment]
name = grid
protocol = nauth
trials = 3
[grid]
n = 4096, 16384
k = n^0.8
t = 3, 4
ell = 4t
[protocol]
extractor = toeplitz
lambda_m = 4
[strategies]
list = passive, swap:0:1;guess=oracle:1
)"));
  EXPECT_EQ(c.protocol, ProtocolKind::nauth);
  const auto grid = c.grid();
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_EQ(grid[0].n, 4096u);
  EXPECT_NEAR(grid[0].k, std::pow(4096.0, 0.8), 1e-9);
  EXPECT_EQ(grid[1].t, 4u);
  EXPECT_EQ(grid[1].ell, 16u);
  EXPECT_EQ(grid[3].n, 16384u);
  ASSERT_EQ(c.strategies.size(), 2u);
}

TEST(Experiment, UnknownNamesFailAtLoad) {
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[experiment]\nprotocol = telepathy\n")),
               ConfigError);
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[protocol]\nextractor = magic\n")), ConfigError);
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[strategies]\nlist = passive, lurk\n")),
               ConfigError);
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[grid]\ncolour = 3\n")), ConfigError);
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[extra]\n")), ConfigError);
  EXPECT_THROW(parse_experiment(ConfigFile::parse("[source]\nfamily = gaussian\n")), ConfigError);
}

TEST(Strategies, FriendlyNamesMapToTheEditGrammar) {
  EXPECT_EQ(strategy_grammar("passive"), "passive");
  EXPECT_EQ(strategy_grammar("bitflip:3"), "edit;ops=flip@3;guess=uniform");
  EXPECT_EQ(strategy_grammar("insert:1:2"), "edit;ops=ins1@2;guess=uniform");
  EXPECT_EQ(strategy_grammar("delete:0"), "edit;ops=del@0;guess=uniform");
  EXPECT_EQ(strategy_grammar("swap:0:1;guess=oracle:1"),
            "edit;ops=swap@0:1;guess=uniform;guess=oracle:1");
  EXPECT_EQ(strategy_grammar("guess:zeros"), "edit;ops=swap@0:1;guess=zeros");
  EXPECT_EQ(strategy_grammar("guess:oracle:0.5:2:5"), "edit;ops=swap@2:5;guess=oracle:0.5");
  EXPECT_EQ(strategy_grammar("replay:1"), "edit;ops=replay@1;guess=uniform");
  EXPECT_THROW(strategy_grammar("insert:2:0"), ConfigError);
  EXPECT_THROW(strategy_grammar("bitflip"), ConfigError);
  EXPECT_THROW(strategy_grammar("bitflip:x"), ConfigError);
  EXPECT_THROW(strategy_grammar("swap:1"), ConfigError);
}

TEST(Strategies, PositionsOutOfRangeAreRejected) {
  EXPECT_NO_THROW(make_strategy("bitflip:7", 8, 2));
  EXPECT_THROW(make_strategy("bitflip:8", 8, 2), ConfigError);
  EXPECT_NO_THROW(make_strategy("insert:0:8", 8, 2));
  EXPECT_THROW(make_strategy("insert:0:9", 8, 2), ConfigError);
  EXPECT_THROW(make_strategy("swap:0:8", 8, 2), ConfigError);
  EXPECT_NO_THROW(make_strategy("replay:1", 8, 2));
  EXPECT_THROW(make_strategy("replay:2", 8, 2), ConfigError);
  EXPECT_THROW(make_strategy("replay:0", 8, 2), ConfigError);
}

TEST(Wilson, MatchesTheClosedForm) {
  // 50 of 100: centre 0.5, half-width z sqrt(0.0025 + z^2/40000) / (1 + z^2/100).
  const double z = 1.959963984540054;
  const double half = z * std::sqrt(0.0025 + z * z / 40000.0) / (1 + z * z / 100.0);
  const auto [lo, hi] = wilson_interval(50, 100);
  EXPECT_NEAR(lo, 0.5 - half, 1e-12);
  EXPECT_NEAR(hi, 0.5 + half, 1e-12);
  const auto [lo0, hi0] = wilson_interval(0, 1000);
  EXPECT_EQ(lo0, 0.0);
  EXPECT_NEAR(hi0, z * z / 1000.0 / (1 + z * z / 1000.0), 1e-12);
  EXPECT_EQ(wilson_interval(0, 0), (std::pair<double, double>{0.0, 1.0}));
}

TEST(MonteCarlo, PassiveIsAlwaysCorrectAndLedgersAgree) {
  const ExperimentConfig c = small_auth();
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 1u);
  const ReportRow& row = r.rows[0];
  EXPECT_EQ(row.status, "ok") << row.reason;
  EXPECT_EQ(row.trials, 20u);
  EXPECT_EQ(row.correct, 20u);
  EXPECT_DOUBLE_EQ(row.correctness_rate, 1.0);
  EXPECT_EQ(row.eve_wins, 0u);
  EXPECT_EQ(row.ledger_mismatches, 0u);
  EXPECT_EQ(row.lemma_violations, 0u);
  // Two phases; each party announces one Toeplitz seed of n + C3[t] - 1 bits.
  const AuthConfig a = make_auth_config(128, 4, 2, SeededExtractor{});
  EXPECT_EQ(row.fresh_bits_a, 2 * (128 + a.schedule.max_length() - 1));
  EXPECT_EQ(row.fresh_bits_b, row.fresh_bits_a);
}

TEST(MonteCarlo, OracleCeilingWinsEverySwap) {
  ExperimentConfig c = small_auth();
  c.t = {4};
  c.ell = {"t"};
  c.message = BitString::from_string("0110");
  c.strategies = {"swap:0:1;guess=oracle:1", "drop_all"};
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].eve_wins, c.trials);
  EXPECT_DOUBLE_EQ(r.rows[0].eve_win_rate, 1.0);
  EXPECT_EQ(r.rows[0].uncertified, 0u);
  EXPECT_EQ(r.rows[1].eve_wins, 0u);
  EXPECT_EQ(r.rows[1].aborts, c.trials);
}

TEST(MonteCarlo, DeterministicAcrossWorkerCounts) {
  ExperimentConfig c = small_auth();
  c.strategies = {"passive", "bitflip:2", "insert:1:3;guess=oracle:0.5", "delete:1"};
  c.workers = 1;
  const std::string one = report_emit(monte_carlo(c), ReportFormat::records);
  c.workers = 3;
  const std::string three = report_emit(monte_carlo(c), ReportFormat::records);
  EXPECT_EQ(one, three);
}

TEST(MonteCarlo, InfeasibleCellsAreSkippedWithAReason) {
  ExperimentConfig c = small_auth();
  c.feasibility = FeasibilityPolicy::strict;
  c.k = {"n/2"};
  c.strategies = {"passive", "bitflip:99"};
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].status, "skipped");
  EXPECT_FALSE(r.rows[0].reason.empty());

  c.feasibility = FeasibilityPolicy::permissive;
  const Report p = monte_carlo(c);
  EXPECT_EQ(p.rows[0].status, "ok");
  EXPECT_FALSE(p.rows[0].flags.empty());
  EXPECT_EQ(p.rows[1].status, "skipped");
  EXPECT_NE(p.rows[1].reason.find("outside"), std::string::npos);
}

TEST(MonteCarlo, KeyProtocolsReportASampledDistance) {
  ExperimentConfig c;
  c.protocol = ProtocolKind::key_agreement;
  c.trials = 8;
  c.workers = 1;
  c.n = {32};
  c.t = {2};
  c.key_bits = 2;
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].status, "ok") << r.rows[0].reason;
  EXPECT_EQ(r.rows[0].correct, 8u);
  ASSERT_TRUE(r.rows[0].key_distance.has_value());
  EXPECT_GE(*r.rows[0].key_distance, 0.0);
}

TEST(MonteCarlo, ExtractRunsThroughTheChannel) {
  ExperimentConfig c;
  c.protocol = ProtocolKind::extract;
  c.trials = 4;
  c.workers = 1;
  c.n = {16};
  c.k = {"8"};
  c.ext.kind = SeededKind::random_oracle_sim;
  c.key_bits = 2;
  c.strategies = {"passive", "bitflip:1;guess=oracle:1"};
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].status, "ok") << r.rows[0].reason;
  EXPECT_EQ(r.rows[0].correct, 4u);
  EXPECT_EQ(r.rows[1].uncertified, 0u);
  EXPECT_EQ(r.rows[1].lemma_violations, 0u);
}

ReportRow sample_row() {
  ReportRow r;
  r.experiment = "e";
  r.protocol = "auth";
  r.strategy = "swap:0:1;guess=oracle:1";
  r.params = "n=128 k=128 t=4 ell=4 base=2";
  r.trials = 100;
  r.correct = 97;
  r.eve_wins = 3;
  r.fresh_bits_a = 16511;
  r.correctness_rate = 0.97;
  r.eve_win_rate = 0.03;
  std::tie(r.eve_win_low, r.eve_win_high) = wilson_interval(3, 100);
  r.key_distance = 0.1234567890123;
  r.flags = {"a \"quoted\" flag", "challenge strings: random-oracle-sim"};
  return r;
}

TEST(Report, EmptyTableIsHeaderOnly) {
  const std::string t = report_emit(Report{}, ReportFormat::table);
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 1);
  EXPECT_EQ(t.rfind("experiment", 0), 0u);
  EXPECT_EQ(report_emit(Report{}, ReportFormat::records), "");
}

TEST(Report, OneCellHasEveryLedgerField) {
  Report r{{sample_row()}};
  const std::string t = report_emit(r, ReportFormat::table);
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 2);
  for (const char* f : {"fresh_bits_a", "fresh_bits_b", "w_loss_bits", "rounds", "eve_win_low"}) {
    EXPECT_NE(t.find(f), std::string::npos) << f;
  }
  EXPECT_NE(t.find("16511"), std::string::npos);
}

TEST(Report, RecordsRoundTrip) {
  Report r{{sample_row(), ReportRow{}}};
  r.rows[1].status = "skipped";
  r.rows[1].reason = "no key remains";
  const std::string text = report_emit(r, ReportFormat::records);
  const Report back = report_parse_records(text);
  EXPECT_EQ(back, r);
  EXPECT_EQ(report_emit(back, ReportFormat::records), text);
  EXPECT_EQ(report_emit(back, ReportFormat::table), report_emit(r, ReportFormat::table));
  EXPECT_THROW(report_parse_records("{\"experiment\": 1}\n"), FormatError);
  EXPECT_THROW(report_parse_records("not json\n"), FormatError);
}

TEST(ExactDistance, PointMassGivesOneMinusTwoToTheMinusM) {
  const SeededExtractor toeplitz;
  for (std::size_t m : {1u, 2u, 3u}) {
    EXPECT_NEAR(exact_seeded_distance(DistributionTable::point(6, 0b101101), toeplitz, m),
                1.0 - std::ldexp(1.0, -static_cast<int>(m)), 1e-12);
  }
}

TEST(ExactDistance, UniformSourceMeetsLeftoverHash) {
  const SeededExtractor toeplitz;
  const double d = exact_seeded_distance(DistributionTable::uniform(8), toeplitz, 2);
  EXPECT_LE(d, toeplitz_error_bound(2, 8) + 1e-12);
  // Rows are the windows s[0..7] and s[1..8] of the 9-bit seed. The zero
  // seed gives a constant (distance 3/4). Rank one needs a zero row or equal
  // rows: 100000000, 000000001 and 111111111, each at distance 1/2. Every
  // other seed is a surjective linear map.
  EXPECT_NEAR(d, (0.75 + 3 * 0.5) / 512.0, 1e-12);
}

TEST(ExactDistance, HandComputedTwoSource) {
  // X uniform on {01, 10}, Y uniform on {01, 11} over GF(4) with z^2+z+1.
  // Products: 01*01=01, 01*11=11, 10*01=10, 10*11=01 (z(z+1)=z^2+z=1).
  // First bit: y=01 gives {0,1}, y=11 gives {1,0}: given_y = 0.
  // x=01 gives {0,1}, x=10 gives {1,0}: given_x = 0.
  const TwoSourceExtractor ext{TwoSourceKind::gf2n_product, 4, 0};
  const auto x = DistributionTable::uniform_on(4, {0b0001, 0b0010});
  const auto y = DistributionTable::uniform_on(4, {0b0001, 0b0011});
  const TwoSourceDistance d = exact_two_source_distance(x, y, ext, 1);
  // In GF(16) with the pinned modulus the four products are 0001, 0011,
  // 0010, 0110; their leading bits are all 0.
  EXPECT_NEAR(d.given_y, 0.5, 1e-12);
  EXPECT_NEAR(d.given_x, 0.5, 1e-12);
  EXPECT_NEAR(d.strong(), 0.5, 1e-12);
}

TEST(ExactDistance, RefusesLargeStateSpaces) {
  const SeededExtractor toeplitz;
  EXPECT_THROW(exact_seeded_distance(DistributionTable::uniform(16), toeplitz, 8), RefusedError);
}

ExtractConfig tiny_extract() {
  ExtractConfig c;
  c.condenser = CondenserSpec{8, 0, 251};
  c.raz = TwoSourceExtractor{TwoSourceKind::gf2n_product, 8, 0};
  c.sr_row_bits = 4;
  c.x1_bits = 1;
  c.x2_bits = 2;
  c.x3_bits = 4;
  c.srg = TwoSourceExtractor{TwoSourceKind::gf2n_product, 8, 0};
  c.r3_bits = 1;
  c.final_ext = TwoSourceExtractor{TwoSourceKind::gf2n_product, 8, 0};
  c.key_bits = 1;
  return c;
}

/// Direct enumeration of the joint distance over (w, x, y).
double brute_joint(const DistributionTable& x, const DistributionTable& y,
                   const DistributionTable& w, const ExtractConfig& c) {
  std::map<std::string, double> joint, transcript;
  for (const auto& [wv, pw] : w.entries()) {
    for (const auto& [xv, px] : x.entries()) {
      for (const auto& [yv, py] : y.entries()) {
        const BitString wb = BitString::from_uint(wv, w.n());
        const ExtractOutcome o = extract_honest_outcome(BitString::from_uint(xv, x.n()),
                                                        BitString::from_uint(yv, y.n()), wb, c);
        const std::string t = wb.to_string() + "|" + o.x1.flatten().to_string() + "|" +
                              o.y1.flatten().to_string() + "|" + o.x2.flatten().to_string() +
                              "|" + o.r3.to_string();
        joint[t + "|" + o.s_x.to_string() + o.s_y.to_string()] += pw * px * py;
        transcript[t] += pw * px * py;
      }
    }
  }
  const double keys = std::ldexp(1.0, static_cast<int>(2 * c.key_bits));
  double sd = 0.0;
  for (const auto& [t, pt] : transcript) {
    std::size_t seen = 0;
    for (auto it = joint.lower_bound(t + "|"); it != joint.end() && it->first.rfind(t + "|", 0) == 0;
         ++it) {
      sd += std::abs(it->second - pt / keys);
      ++seen;
    }
    sd += (keys - static_cast<double>(seen)) * pt / keys;
  }
  return 0.5 * sd;
}

TEST(ExactDistance, ExtractJointMatchesBruteForceAndBound) {
  const ExtractConfig c = tiny_extract();
  SourceSpec s{8, 4, SourceFamily::flat, 3, -1, {}, {}};
  const auto x = to_table(s);
  s.seed = 4;
  const auto y = to_table(s);
  s.seed = 5;
  const auto w = to_table(s);
  const ExtractDistance d = exact_extract_distance(x, y, w, c);
  EXPECT_NEAR(d.joint, brute_joint(x, y, w, c), 1e-12);
  EXPECT_LE(d.joint, d.bound() + 1e-12);
  EXPECT_GE(d.delta_x, 0.0);
  EXPECT_GE(d.delta_key, 0.0);
}

TEST(ExactDistance, IndependentSrRowsHaveNoDependence) {
  // With w fixed the matrices cannot depend on w, so both deltas vanish
  // and the ideal world equals the real one.
  const ExtractConfig c = tiny_extract();
  const auto x = DistributionTable::uniform(8);
  const auto w = DistributionTable::point(8, 0b00000001);
  const ExtractDistance d = exact_extract_distance(x, x, w, c);
  EXPECT_NEAR(d.delta_x, 0.0, 1e-15);
  EXPECT_NEAR(d.delta_y, 0.0, 1e-15);
  EXPECT_NEAR(d.joint, d.delta_key, 1e-12);
}

}  // namespace
}  // namespace amplify

namespace amplify {
namespace {

TEST(Accounting, FourPhasesOfTwelveBitSeeds) {
  // ell = 16, t = 4: four phases, one 12-bit seed per party per phase.
  ExperimentConfig c = small_auth();
  c.ell = {"16"};
  c.ext.kind = SeededKind::random_oracle_sim;
  c.ext.oracle_seed_bits = 12;
  const CellRunner runner(c, c.grid().at(0), 0);
  const TrialOutcome o = runner.run("passive", 0);
  const Accounting acc = account(o.session.transcript);
  EXPECT_EQ(acc.a.fresh_bits, 48u);
  EXPECT_EQ(acc.b.fresh_bits, 48u);
  EXPECT_EQ(o.ledger_a.fresh_bits, 48u);
  EXPECT_EQ(o.ledger_b.fresh_bits, 48u);
}

TEST(Accounting, EmptyTranscriptIsZero) {
  const Accounting acc = account(Transcript{});
  EXPECT_EQ(acc.a.fresh_bits + acc.b.fresh_bits, 0u);
  EXPECT_EQ(acc.a.revealed_bits + acc.b.revealed_bits, 0u);
  EXPECT_EQ(acc.a.frames + acc.b.frames, 0u);
  EXPECT_EQ(acc.rounds, 0u);
}

}  // namespace
}  // namespace amplify

namespace amplify {
namespace {

TEST(Accounting, IdealizedSeedCost) {
  // Two phases, one seed per party each, charged 3t = 12 bits per seed.
  ExperimentConfig c = small_auth();
  c.trials = 3;
  c.idealized_seed_accounting = true;
  const Report r = monte_carlo(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].fresh_bits_a, 24u);
  EXPECT_EQ(r.rows[0].fresh_bits_b, 24u);
  EXPECT_EQ(r.rows[0].ledger_mismatches, 0u);
  EXPECT_NE(std::find(r.rows[0].flags.begin(), r.rows[0].flags.end(),
                      "idealized seed accounting: 12 bits per seed"),
            r.rows[0].flags.end());
  EXPECT_TRUE(parse_experiment(ConfigFile::parse("[experiment]\nidealized_seed_accounting = true\n"))
                  .idealized_seed_accounting);
}

}  // namespace
}  // namespace amplify
