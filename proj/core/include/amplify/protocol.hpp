#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amplify/bits.hpp"
#include "amplify/codes.hpp"
#include "amplify/extractors.hpp"
#include "amplify/random.hpp"

namespace amplify {

// ---- Challenge schedule -----------------------------------------------------

/// Prefix lengths C1[i] = base^(3i-2) unit, C2[i] = base^(3i-1) unit and
/// C3[i] = base^(3i) unit for rounds i = 1..rounds. Vectors are 0-based.
struct ChallengeSchedule {
  std::uint64_t base = 2;
  std::size_t unit = 1;
  std::vector<std::size_t> c1, c2, c3;

  std::size_t rounds() const noexcept { return c1.size(); }
  /// C1[i] when flag is 0, C2[i] when flag is 1. `i` is 1-based.
  std::size_t data_length(std::size_t i, bool flag) const;
  std::size_t response_length(std::size_t i) const;
  /// C3[rounds], or 0 for an empty schedule.
  std::size_t max_length() const noexcept;
};

/// Throws ConfigError naming the first entry that overflows or exceeds
/// `ext_output_len`.
ChallengeSchedule schedule_build(std::uint64_t base, std::size_t unit, std::size_t rounds,
                                 std::size_t ext_output_len);

/// Smallest margin, over rounds and over the three tampering moves (insert a
/// data frame, turn a 0 into a 1, delete a data frame), between the prefix
/// length a verifier demands and the bits revealed earlier in the same phase
/// with rounds aligned. Each revealed prefix counts `rows` times.
std::int64_t schedule_min_gap(const ChallengeSchedule& s, std::size_t rows = 1);

// ---- Frames -------------------------------------------------------------------

enum class Direction : std::uint8_t { a_to_b, b_to_a };
enum class FrameKind : std::uint8_t {
  seed,
  data,
  response,
  plaintext,
  final,  // reserved in the log format; no protocol here emits it
};

std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);
std::string_view frame_kind_name(FrameKind k);
FrameKind parse_frame_kind(std::string_view name);

/// Wire unit. `phase` is 1-based; `round` is the 1-based schedule index for
/// data and response frames and 0 otherwise.
struct Frame {
  Direction dir = Direction::a_to_b;
  FrameKind kind = FrameKind::seed;
  bool flag = false;
  std::size_t phase = 0;
  std::size_t round = 0;
  BitString payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

// ---- Parties --------------------------------------------------------------------

enum class Role : std::uint8_t { initiator, responder };
enum class PartyStatus : std::uint8_t { running, accepted, aborted };

std::string_view party_status_name(PartyStatus s);
PartyStatus parse_party_status(std::string_view name);

/// Thrown when a party draws more local randomness than its budget.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metered local randomness of one party.
class LocalRandomness {
 public:
  explicit LocalRandomness(std::uint64_t seed, std::size_t budget_bits = SIZE_MAX);
  BitString draw(std::size_t nbits);
  std::size_t used() const noexcept { return used_; }

 private:
  Rng rng_;
  std::size_t budget_;
  std::size_t used_ = 0;
};

/// What a running party accepts next. Derivable from the frames the party
/// has been handed, so a mediator may consult it without learning secrets.
struct Expectation {
  FrameKind kind = FrameKind::seed;
  std::size_t phase = 0;
  std::size_t round = 0;
};

struct PartyLedger {
  std::size_t fresh_bits = 0;
  /// Sum over this party's revealed extractor outputs of the longest
  /// prefix sent, over all rows.
  std::size_t revealed_bits = 0;
  std::size_t frames_sent = 0;
};

/// One side of a protocol. A party consumes frames strictly in arrival
/// order; any frame that disagrees with its state aborts it.
class Party {
 public:
  virtual ~Party() = default;

  Role role() const noexcept { return role_; }
  Direction outgoing() const noexcept {
    return role_ == Role::initiator ? Direction::a_to_b : Direction::b_to_a;
  }
  PartyStatus status() const noexcept { return status_; }
  bool running() const noexcept { return status_ == PartyStatus::running; }
  /// Final result on acceptance: the message for authentication, the key
  /// for key agreement and extraction.
  const std::optional<BitString>& output() const noexcept { return output_; }
  /// Message this party authenticated to its counterpart, and the one it
  /// accepted from its counterpart.
  const std::optional<BitString>& sent_message() const noexcept { return sent_; }
  const std::optional<BitString>& received_message() const noexcept { return received_; }
  const std::string& abort_reason() const noexcept { return reason_; }
  const PartyLedger& ledger() const noexcept { return ledger_; }
  /// Rows per revealed prefix (1 except in the matrix protocol).
  std::size_t rows() const noexcept { return rows_; }

  std::vector<Frame> start();
  std::vector<Frame> receive(const Frame& frame);
  std::optional<Expectation> awaiting() const;
  void force_abort(std::string reason);

 protected:
  explicit Party(Role role, std::size_t rows = 1) : role_(role), rows_(rows) {}

  virtual std::vector<Frame> on_start() = 0;
  virtual std::vector<Frame> on_frame(const Frame& frame) = 0;
  virtual Expectation expectation() const = 0;

  std::vector<Frame> abort(std::string reason);
  void accept(BitString result);
  void set_sent(BitString m) { sent_ = std::move(m); }
  void set_received(BitString m) { received_ = std::move(m); }
  void charge_randomness(std::size_t nbits) { ledger_.fresh_bits += nbits; }

  /// Installs Ext(w, counterpart seed) and Ext(w, own seed) for a phase.
  void load_strings(BitMatrix reveal, BitMatrix verify);
  Frame data_frame(std::size_t phase, std::size_t round, bool flag,
                   const ChallengeSchedule& s);
  Frame response_frame(std::size_t phase, std::size_t round, const ChallengeSchedule& s);
  /// Checks a frame's direction, kind and declared indices.
  bool expected_header(const Frame& f, FrameKind kind, std::size_t phase,
                       std::size_t round) const;
  /// True when the payload equals the row-wise prefix of length `len` of
  /// this party's own extractor output.
  bool verifies(const BitString& payload, std::size_t len) const;
  Frame plain(FrameKind kind, std::size_t phase, BitString payload) const;

 private:
  BitString reveal_prefix(std::size_t len);

  Role role_;
  std::size_t rows_;
  PartyStatus status_ = PartyStatus::running;
  std::optional<BitString> output_, sent_, received_;
  std::string reason_;
  PartyLedger ledger_;
  BitMatrix reveal_, verify_;
  std::size_t reveal_max_ = 0;
};

// ---- Authentication family ---------------------------------------------------

/// Appends 1 0...0 to reach a multiple of t; aligned strings are unchanged.
BitString pad_to_multiple(const BitString& m, std::size_t t);

/// Shared parameters of one challenge-response phase.
struct AuthConfig {
  std::size_t t = 4;
  ChallengeSchedule schedule;
  SeededExtractor ext;
  /// Fresh seed bits each party announces per phase.
  std::size_t seed_bits = 0;
};

/// Schedule with t rounds and seed length for a source of n bits.
AuthConfig make_auth_config(std::size_t n, std::size_t t, std::uint64_t base,
                            const SeededExtractor& ext, std::size_t ext_output_limit = SIZE_MAX);

enum class AuthMode : std::uint8_t {
  /// Bits go over the challenge rounds; the receiver knows their weight.
  raw,
  /// The message travels in plaintext and its edit codeword over the
  /// challenge rounds.
  edit,
};

/// Public description of what the initiator authenticates: `units`
/// consecutive messages of `message_bits` bits each.
struct AuthProgram {
  AuthMode mode = AuthMode::raw;
  std::size_t message_bits = 0;
  std::size_t units = 1;
  std::shared_ptr<const EditCodebook> book;

  /// Bits carried by the challenge rounds for one unit (after padding).
  std::size_t wire_bits(std::size_t t) const;
  std::size_t phases(std::size_t t) const;
  BitString wire(const BitString& message, std::size_t t) const;
};

/// How the parties finish after the last unit.
struct KeyStage {
  /// Key length; 0 means the authenticated message itself is the output.
  std::size_t key_bits = 0;
  /// Bits of the authenticated message used as the key seed.
  std::size_t seed_bits = 0;
  SeededExtractor ext;
};

/// Runs the units; on success the initiator's output is the concatenated
/// messages (or the derived key) and the responder's output is what it
/// accepted.
class AuthInitiator final : public Party {
 public:
  AuthInitiator(BitString w, std::vector<BitString> messages, AuthProgram program,
                AuthConfig config, LocalRandomness randomness, KeyStage key = {});

 private:
  std::vector<Frame> on_start() override;
  std::vector<Frame> on_frame(const Frame& frame) override;
  Expectation expectation() const override;
  std::vector<Frame> begin_unit();
  std::vector<Frame> begin_phase();
  std::vector<Frame> finish();

  enum class Stage { seed, response, done };
  BitString w_;
  std::vector<BitString> messages_;
  AuthProgram program_;
  AuthConfig config_;
  LocalRandomness randomness_;
  KeyStage key_;
  BitString own_seed_, wire_;
  std::size_t unit_ = 0, phase_ = 0, phase_in_unit_ = 0, round_ = 0;
  Stage stage_ = Stage::seed;
};

class AuthResponder final : public Party {
 public:
  /// `expected_weights[u]` is the public weight of unit u's message in raw
  /// mode and ignored in edit mode.
  AuthResponder(BitString w, AuthProgram program, AuthConfig config, LocalRandomness randomness,
                std::vector<std::size_t> expected_weights = {}, KeyStage key = {});

 private:
  std::vector<Frame> on_start() override;
  std::vector<Frame> on_frame(const Frame& frame) override;
  Expectation expectation() const override;
  std::vector<Frame> begin_unit();
  std::vector<Frame> begin_phase();
  std::vector<Frame> end_unit(std::vector<Frame> out);

  enum class Stage { plaintext, seed, data, done };
  BitString w_;
  AuthProgram program_;
  AuthConfig config_;
  LocalRandomness randomness_;
  std::vector<std::size_t> weights_;
  KeyStage key_;
  BitString own_seed_, wire_, plaintext_, accepted_;
  std::size_t unit_ = 0, phase_ = 0, phase_in_unit_ = 0, round_ = 0;
  Stage stage_ = Stage::plaintext;
};

struct PartyPair {
  std::unique_ptr<Party> initiator;
  std::unique_ptr<Party> responder;
};

/// Seeds for the two parties' local randomness.
struct PartySeeds {
  std::uint64_t initiator = 1;
  std::uint64_t responder = 2;
  std::size_t budget_bits = SIZE_MAX;
};

/// One challenge-response phase authenticating |m| = t bits.
PartyPair make_sauth(const BitString& w, const BitString& m, const AuthConfig& config,
                     const PartySeeds& seeds);
/// |m| / t phases (after padding) followed by the weight check.
PartyPair make_auth(const BitString& w, const BitString& m, const AuthConfig& config,
                    const PartySeeds& seeds);
/// Plaintext message plus authenticated edit codeword.
PartyPair make_nauth(const BitString& w, const BitString& m,
                     std::shared_ptr<const EditCodebook> book, const AuthConfig& config,
                     const PartySeeds& seeds);

// ---- Key agreement ---------------------------------------------------------------

struct KeyAgreementConfig {
  AuthConfig auth;
  std::shared_ptr<const EditCodebook> book;
  SeededExtractor key_ext;
  std::size_t key_bits = 0;
};

/// Key length k - spent - 2 log2(1/eps), floored. Throws ConfigError when it
/// is not positive.
std::size_t key_length(double k, double spent_bits, double eps);

/// W-derived bits an honest run reveals in the worst case over messages:
/// every phase reveals at most C2[t] + C3[t] bits per row.
std::size_t auth_revealed_bound(const AuthConfig& config, std::size_t phases,
                                std::size_t rows = 1);

/// Alice draws a key seed, authenticates it block-wise with the edit-code
/// protocol, and both sides extract the key from w with it.
PartyPair make_key_agreement(const BitString& w, const KeyAgreementConfig& config,
                             const PartySeeds& seeds);

/// Key from w and an authenticated seed.
BitString derive_key(const BitString& w, const KeyAgreementConfig& config,
                     const BitString& authenticated_seed);

// ---- Protocols with weak local sources ------------------------------------------

/// Matrix protocol parameters. Slices take prefixes of the rows of
/// SR = raz(condense(source)_i, w) of widths x1 < x2 <= x3 <= sr_row_bits.
struct ExtractConfig {
  CondenserSpec condenser;
  TwoSourceExtractor raz;
  std::size_t sr_row_bits = 8;
  std::size_t x1_bits = 2;
  std::size_t x2_bits = 2;
  std::size_t x3_bits = 8;
  /// Ext(w, row of x1) for the challenge strings.
  SeededExtractor ext;
  ChallengeSchedule schedule;
  TwoSourceExtractor srg;
  std::size_t r3_bits = 1;
  /// Ext(x3, r3) for the output keys; the seed is r3.
  TwoSourceExtractor final_ext;
  std::size_t key_bits = 1;

  std::size_t rows() const { return condenser.rows(); }
  /// Rounds authenticating x2 and r3 (constant-weight encoded).
  std::size_t t() const { return 2 * rows() * x2_bits; }
  std::size_t t_prime() const { return 2 * r3_bits; }
  /// Throws ConfigError for inconsistent widths, t' >= t, or a schedule
  /// shorter than t + t' rounds.
  void validate() const;
};

/// Departures from the analysed setting: a schedule base other than 4D, a
/// challenge gap below 2 * unit, simulation-only stand-ins.
std::vector<std::string> extract_warnings(const ExtractConfig& config);

/// Slices computed locally from a weak source and w.
struct ExtractSlices {
  BitMatrix s1, s2, s3;
};
ExtractSlices extract_slices(const BitString& source, const BitString& w,
                             const ExtractConfig& config);
/// r3 = srg(y2, x2).
BitString extract_r3(const BitMatrix& y2, const BitMatrix& x2, const ExtractConfig& config);
BitString extract_key(const BitMatrix& s3, const BitString& r3, const ExtractConfig& config);

PartyPair make_extract(const BitString& x, const BitString& y, const BitString& w,
                       const ExtractConfig& config);

/// Honest-run results computed without the challenge rounds. The transcript
/// of an honest run is a function of (w, x1, y1, x2, r3).
struct ExtractOutcome {
  BitString s_x, s_y;
  BitMatrix x1, y1, x2;
  BitString r3;
};
ExtractOutcome extract_honest_outcome(const BitString& x, const BitString& y, const BitString& w,
                                      const ExtractConfig& config);

/// Each party applies the two-source extractor to its own source and w.
/// Throws ConfigError when a declared source rate is at most 1/2.
std::pair<BitString, BitString> extracth_run(const BitString& x, const BitString& y,
                                             const BitString& w, double kx, double ky,
                                             const TwoSourceExtractor& ext, std::size_t m);

/// As extracth_run with the random-oracle stand-in; simulation only.
std::pair<BitString, BitString> nextract_run(const BitString& x, const BitString& y,
                                             const BitString& w, std::size_t m,
                                             std::uint64_t session_seed);

// ---- Honest execution --------------------------------------------------------------

/// Delivers frames first-in first-out with no adversary until both parties
/// stop. Returns the number of frames exchanged.
std::size_t run_honest(Party& a, Party& b, std::size_t frame_cap = 1'000'000);

/// Responder's accepted message over an honest channel, or nullopt (⊥).
std::optional<BitString> auth_run(const BitString& w, const BitString& m,
                                  const AuthConfig& config, const PartySeeds& seeds);
std::optional<BitString> nauth_run(const BitString& w, const BitString& m,
                                   std::shared_ptr<const EditCodebook> book,
                                   const AuthConfig& config, const PartySeeds& seeds);
std::optional<std::pair<BitString, BitString>> extract_run(const BitString& x,
                                                           const BitString& y,
                                                           const BitString& w,
                                                           const ExtractConfig& config);

// ---- Feasibility ---------------------------------------------------------------------

enum class FeasibilityPolicy : std::uint8_t { strict, permissive };

/// Checks the entropy precondition k >= 10 base^(3t) ell and, for Toeplitz
/// hashing, the leftover-hash output limit C3[t] <= k. Strict policy throws
/// ConfigError on the first violation; permissive returns the violations.
std::vector<std::string> check_auth_feasibility(double k, std::size_t ell,
                                                const AuthConfig& config,
                                                FeasibilityPolicy policy);

}  // namespace amplify
