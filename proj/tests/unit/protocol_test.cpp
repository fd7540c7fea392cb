#include "amplify/protocol.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <functional>

#include "amplify/codes.hpp"
#include "amplify/error.hpp"
#include "amplify/random.hpp"

namespace amplify {
namespace {

BitString B(const char* s) { return BitString::from_string(s); }

SeededExtractor toeplitz() { return SeededExtractor{SeededKind::toeplitz, 0, 64}; }
SeededExtractor oracle(std::uint64_t seed = 9) {
  return SeededExtractor{SeededKind::random_oracle_sim, seed, 64};
}

// Delivers frames first-in first-out, passing each through `tamper`, which
// may rewrite it or return false to drop it.
using Tamper = std::function<bool(Frame&)>;
void run_with(Party& a, Party& b, const Tamper& tamper) {
  std::deque<Frame> q;
  for (auto& f : a.start()) q.push_back(f);
  for (auto& f : b.start()) q.push_back(f);
  while (!q.empty()) {
    Frame f = q.front();
    q.pop_front();
    if (!tamper(f)) continue;
    Party& to = f.dir == Direction::a_to_b ? b : a;
    for (auto& g : to.receive(f)) q.push_back(g);
  }
}

TEST(Schedule, Examples) {
  const ChallengeSchedule s = schedule_build(2, 4, 4, SIZE_MAX);
  EXPECT_EQ(s.c1, (std::vector<std::size_t>{8, 64, 512, 4096}));
  EXPECT_EQ(s.c2, (std::vector<std::size_t>{16, 128, 1024, 8192}));
  EXPECT_EQ(s.c3, (std::vector<std::size_t>{32, 256, 2048, 16384}));
  EXPECT_EQ(s.data_length(2, false), 64u);
  EXPECT_EQ(s.data_length(2, true), 128u);
  EXPECT_EQ(s.response_length(4), 16384u);
  EXPECT_THROW(s.data_length(0, false), RangeError);
  EXPECT_THROW(s.response_length(5), RangeError);

  const ChallengeSchedule d = schedule_build(12, 8, 1, SIZE_MAX);
  EXPECT_EQ(d.c1[0], 96u);
  EXPECT_EQ(d.c2[0], 1152u);
  EXPECT_EQ(d.c3[0], 13824u);

  const ChallengeSchedule empty = schedule_build(2, 4, 0, 0);
  EXPECT_EQ(empty.rounds(), 0u);
  EXPECT_EQ(empty.max_length(), 0u);
}

TEST(Schedule, RejectsOversizedEntries) {
  EXPECT_THROW(schedule_build(2, 4, 4, 16383), ConfigError);
  EXPECT_NO_THROW(schedule_build(2, 4, 4, 16384));
  EXPECT_THROW(schedule_build(2, 1, 30, SIZE_MAX), ConfigError);
  EXPECT_THROW(schedule_build(1, 4, 2, SIZE_MAX), ConfigError);
}

TEST(Schedule, GapAtLeastTwoUnitsForBaseTwo) {
  // Round 1 flip: C2[1] - C1[1] = 2 unit is the tightest move.
  EXPECT_EQ(schedule_min_gap(schedule_build(2, 4, 4, SIZE_MAX)), 8);
  // Three rows with base 12: insert at round 1 demands C1[1] = 96 against
  // nothing revealed; later rounds leave more.
  EXPECT_EQ(schedule_min_gap(schedule_build(12, 8, 2, SIZE_MAX), 3), 96);
  // Base 2 with three rows no longer separates the moves.
  EXPECT_LT(schedule_min_gap(schedule_build(2, 4, 3, SIZE_MAX), 3), 0);
}

TEST(Padding, Examples) {
  EXPECT_EQ(pad_to_multiple(B("101"), 4), B("1011"));
  EXPECT_EQ(pad_to_multiple(B("1011"), 4), B("1011"));
  EXPECT_EQ(pad_to_multiple(B("10110"), 4), B("10110100"));
  EXPECT_EQ(pad_to_multiple(B(""), 4), B(""));
}

TEST(Names, RoundTrip) {
  for (FrameKind k : {FrameKind::seed, FrameKind::data, FrameKind::response, FrameKind::plaintext,
                      FrameKind::final}) {
    EXPECT_EQ(parse_frame_kind(frame_kind_name(k)), k);
  }
  EXPECT_EQ(parse_direction("ba"), Direction::b_to_a);
  EXPECT_EQ(parse_party_status("aborted"), PartyStatus::aborted);
  EXPECT_THROW(parse_frame_kind("ack"), FormatError);
}

struct AuthFixture : ::testing::Test {
  Rng rng{5};
  BitString w = random_bits(rng, 256);
  AuthConfig config = make_auth_config(256, 4, 2, toeplitz());
};

TEST_F(AuthFixture, SingleLengthHonestRuns) {
  for (const char* m : {"0000", "1011", "1111"}) {
    EXPECT_EQ(auth_run(w, B(m), config, {}), B(m));
  }
  EXPECT_THROW(make_sauth(w, B("101"), config, {}), ConfigError);
}

TEST_F(AuthFixture, LongMessageWithPadding) {
  const BitString m = B("1101001110");
  PartyPair p = make_auth(w, m, config, {3, 4});
  const std::size_t frames = run_honest(*p.initiator, *p.responder);
  // Three phases: two seeds and 2t data/response frames each.
  EXPECT_EQ(frames, 3u * (2 + 2 * 4));
  EXPECT_EQ(p.responder->received_message(), m);
  EXPECT_EQ(p.initiator->output(), m);
  // Fresh bits are the announced seeds.
  EXPECT_EQ(p.initiator->ledger().fresh_bits, 3 * config.seed_bits);
}

TEST_F(AuthFixture, EditCodeHonestRun) {
  auto book = std::make_shared<const EditCodebook>(edit_code_generate(4, 0.25, 0.25));
  const BitString m = B("01101001");
  PartyPair p = make_nauth(w, m, book, config, {});
  run_honest(*p.initiator, *p.responder);
  EXPECT_EQ(p.responder->status(), PartyStatus::accepted);
  EXPECT_EQ(p.responder->received_message(), m);
}

TEST_F(AuthFixture, FlippedPayloadBitAborts) {
  PartyPair p = make_sauth(w, B("1001"), config, {});
  run_with(*p.initiator, *p.responder, [](Frame& f) {
    if (f.kind == FrameKind::data && f.round == 2) f.payload.flip(0);
    return true;
  });
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
  EXPECT_FALSE(p.responder->received_message());
  // Alice never receives the round 2 response and waits for it.
  ASSERT_TRUE(p.initiator->awaiting());
  EXPECT_EQ(p.initiator->awaiting()->kind, FrameKind::response);
  EXPECT_EQ(p.initiator->awaiting()->round, 2u);
}

TEST_F(AuthFixture, FlagWithoutMatchingLengthAborts) {
  PartyPair p = make_sauth(w, B("1001"), config, {});
  run_with(*p.initiator, *p.responder, [](Frame& f) {
    if (f.kind == FrameKind::data && f.round == 2) f.flag = true;
    return true;
  });
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
}

TEST_F(AuthFixture, RoundIndexMismatchAborts) {
  PartyPair p = make_sauth(w, B("1001"), config, {});
  run_with(*p.initiator, *p.responder, [](Frame& f) {
    if (f.kind == FrameKind::response && f.round == 1) f.round = 2;
    return true;
  });
  EXPECT_EQ(p.initiator->status(), PartyStatus::aborted);
}

TEST_F(AuthFixture, DroppedFrameStalls) {
  PartyPair p = make_sauth(w, B("1001"), config, {});
  run_with(*p.initiator, *p.responder,
           [](Frame& f) { return !(f.kind == FrameKind::data && f.round == 3); });
  p.initiator->force_abort("silent");
  p.responder->force_abort("silent");
  EXPECT_FALSE(p.responder->received_message());
}

// A forger who knows w rewrites Alice's data frames to carry `forged`.
Tamper omniscient(const BitString& w, const AuthConfig& c, const BitString& forged) {
  auto bob_seed = std::make_shared<BitString>();
  return [=](Frame& f) {
    if (f.kind == FrameKind::seed && f.dir == Direction::b_to_a) *bob_seed = f.payload;
    if (f.kind == FrameKind::data) {
      const std::size_t idx = (f.phase - 1) * c.t + f.round - 1;
      f.flag = forged[idx];
      const std::size_t len = c.schedule.data_length(f.round, f.flag);
      f.payload = prefix(c.ext.extract(w, *bob_seed, c.schedule.max_length()), len);
    }
    return true;
  };
}

TEST_F(AuthFixture, WeightCheckCatchesForgedOnes) {
  PartyPair p = make_sauth(w, B("1000"), config, {});
  run_with(*p.initiator, *p.responder, omniscient(w, config, B("1100")));
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
  EXPECT_EQ(p.responder->abort_reason(), "weight check failed");
}

TEST_F(AuthFixture, PaddingIsChecked) {
  // 100 pads to 1001; 1100 keeps the weight but moves a one out of the pad.
  PartyPair p = make_auth(w, B("100"), config, {});
  run_with(*p.initiator, *p.responder, omniscient(w, config, B("1100")));
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
  EXPECT_EQ(p.responder->abort_reason(), "padding mismatch");
}

TEST_F(AuthFixture, EditModeRejectsCodewordOfAnotherPlaintext) {
  auto book = std::make_shared<const EditCodebook>(edit_code_generate(4, 0.25, 0.25));
  PartyPair p = make_nauth(w, B("0110"), book, config, {});
  run_with(*p.initiator, *p.responder, omniscient(w, config, book->encode(B("0111"))));
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
  EXPECT_EQ(p.responder->abort_reason(), "codeword does not match the plaintext");
}

TEST_F(AuthFixture, ZeroBudgetFailsAtStart) {
  PartyPair p = make_sauth(w, B("1001"), config, {1, 2, 0});
  EXPECT_THROW(p.initiator->start(), BudgetExhausted);
}

TEST_F(AuthFixture, RevealedBitsAreTheLongestPrefixes) {
  const BitString m = B("0110");
  PartyPair p = make_sauth(w, m, config, {});
  run_honest(*p.initiator, *p.responder);
  // Alice reveals her last data prefix, Bob his last response.
  EXPECT_EQ(p.initiator->ledger().revealed_bits, config.schedule.c1[3]);
  EXPECT_EQ(p.responder->ledger().revealed_bits, config.schedule.c3[3]);
  EXPECT_EQ(auth_revealed_bound(config, 1), config.schedule.c2[3] + config.schedule.c3[3]);
}

TEST(KeyAgreement, HonestPartiesAgree) {
  Rng rng(8);
  const BitString w = random_bits(rng, 64);
  KeyAgreementConfig c;
  c.auth = make_auth_config(64, 2, 2, toeplitz());
  c.book = std::make_shared<const EditCodebook>(edit_code_generate(4, 0.25, 0.25));
  c.key_ext = toeplitz();
  c.key_bits = 6;
  PartyPair p = make_key_agreement(w, c, {11, 12});
  run_honest(*p.initiator, *p.responder);
  ASSERT_EQ(p.initiator->status(), PartyStatus::accepted);
  ASSERT_EQ(p.responder->status(), PartyStatus::accepted);
  EXPECT_EQ(p.initiator->output(), p.responder->output());
  EXPECT_EQ(p.initiator->output()->size(), 6u);
  EXPECT_EQ(*p.initiator->output(), derive_key(w, c, *p.responder->received_message()));
  // 69 seed bits in 4-bit blocks.
  EXPECT_EQ(p.responder->received_message()->size(), 72u);
}

TEST(KeyAgreement, KeyLength) {
  EXPECT_EQ(key_length(100, 40, 1.0 / 1024), 40u);
  EXPECT_THROW(key_length(10, 8, 0.25), ConfigError);
  EXPECT_THROW(key_length(100, 8, 0), ConfigError);
}

TEST(Feasibility, StrictAndPermissive) {
  const AuthConfig c = make_auth_config(1024, 3, 2, toeplitz());
  // 10 * 2^9 * 6 = 30720.
  EXPECT_NO_THROW(check_auth_feasibility(40000, 6, c, FeasibilityPolicy::strict));
  EXPECT_THROW(check_auth_feasibility(1000, 6, c, FeasibilityPolicy::strict), ConfigError);
  const auto v = check_auth_feasibility(1000, 6, c, FeasibilityPolicy::permissive);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NE(v[1].find("Toeplitz"), std::string::npos);
}

ExtractConfig small_extract(unsigned iterations) {
  ExtractConfig c;
  c.condenser = CondenserSpec{16, iterations, 251};
  c.raz = TwoSourceExtractor{TwoSourceKind::gf2n_product, 8, 0};
  c.sr_row_bits = 4;
  c.x1_bits = 1;
  c.x2_bits = 2;
  c.x3_bits = 4;
  c.ext = oracle();
  c.srg = TwoSourceExtractor{TwoSourceKind::gf2n_product, 8, 0};
  c.r3_bits = 1;
  c.final_ext = TwoSourceExtractor{TwoSourceKind::random_oracle_sim, 8, 21};
  c.key_bits = 2;
  c.schedule = schedule_build(2, 1, c.t() + c.t_prime(), SIZE_MAX);
  return c;
}

TEST(Extract, ValidatesWidths) {
  ExtractConfig c = small_extract(0);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.t(), 4u);
  EXPECT_EQ(c.t_prime(), 2u);
  c.x2_bits = 1;
  EXPECT_THROW(c.validate(), ConfigError);  // x1 < x2 fails
  c = small_extract(0);
  c.r3_bits = 2;
  EXPECT_THROW(c.validate(), ConfigError);  // t' = t
  c = small_extract(0);
  c.ext = toeplitz();
  EXPECT_THROW(c.validate(), ConfigError);
  const auto warnings = extract_warnings(small_extract(0));
  EXPECT_FALSE(warnings.empty());
  EXPECT_NE(warnings.front().find("differs from 4D"), std::string::npos);
}

TEST(Extract, HonestRunMatchesFastPath) {
  Rng rng(13);
  const ExtractConfig c = small_extract(0);
  for (int trial = 0; trial < 6; ++trial) {
    const BitString x = random_bits(rng, 16), y = random_bits(rng, 16), w = random_bits(rng, 16);
    PartyPair p = make_extract(x, y, w, c);
    run_honest(*p.initiator, *p.responder);
    ASSERT_EQ(p.initiator->status(), PartyStatus::accepted);
    ASSERT_EQ(p.responder->status(), PartyStatus::accepted);
    const ExtractOutcome o = extract_honest_outcome(x, y, w, c);
    EXPECT_EQ(p.initiator->output(), o.s_x);
    EXPECT_EQ(p.responder->output(), o.s_y);
    // Each side learns the other's authenticated slice.
    EXPECT_EQ(p.responder->received_message(), o.x2.flatten());
    EXPECT_EQ(p.initiator->received_message(), o.r3);
    EXPECT_EQ(extract_run(x, y, w, c), std::make_pair(o.s_x, o.s_y));
  }
}

TEST(Extract, SlicesOfTheCondensedMatrix) {
  Rng rng(16);
  const ExtractConfig c = small_extract(1);
  EXPECT_EQ(c.rows(), 3u);
  EXPECT_EQ(c.t(), 12u);
  const BitString x = random_bits(rng, 16), w = random_bits(rng, 16);
  const ExtractSlices s = extract_slices(x, w, c);
  const BitMatrix rows = somewhere_condense(x, c.condenser);
  ASSERT_EQ(s.s3.rows(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.s3.row(i), gf2n_product_extract(rows.row(i), prefix(w, 8), 4));
    EXPECT_EQ(s.s1.row(i), prefix(s.s3.row(i), 1));
    EXPECT_EQ(s.s2.row(i), prefix(s.s3.row(i), 2));
  }
}

TEST(Extract, TamperedSliceAborts) {
  Rng rng(14);
  const ExtractConfig c = small_extract(0);
  const BitString x = random_bits(rng, 16), y = random_bits(rng, 16), w = random_bits(rng, 16);
  PartyPair p = make_extract(x, y, w, c);
  run_with(*p.initiator, *p.responder, [](Frame& f) {
    if (f.kind == FrameKind::data && f.round == 1) f.flag = !f.flag;
    return true;
  });
  EXPECT_EQ(p.responder->status(), PartyStatus::aborted);
}

TEST(TwoSource, RateCheck) {
  Rng rng(15);
  const BitString x = random_bits(rng, 8), y = random_bits(rng, 8), w = random_bits(rng, 8);
  const TwoSourceExtractor ext{TwoSourceKind::gf2n_product, 8, 0};
  EXPECT_THROW(extracth_run(x, y, w, 4, 7, ext, 2), ConfigError);
  const auto [a, b] = extracth_run(x, y, w, 5, 7, ext, 2);
  EXPECT_EQ(a, gf2n_product_extract(x, w, 2));
  EXPECT_EQ(b, gf2n_product_extract(y, w, 2));
  const auto [c, d] = nextract_run(x, x, w, 5, 3);
  EXPECT_EQ(c, d);
}

}  // namespace
}  // namespace amplify
