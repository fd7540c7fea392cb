#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amplify/protocol.hpp"
#include "amplify/random.hpp"

namespace amplify {

// ---- Transcript -------------------------------------------------------------------

enum class EventType : std::uint8_t {
  emit,     // a party put a frame on the wire
  deliver,  // the adversary handed a frame to a party
  drop,     // the adversary discarded an emitted frame
};

std::string_view event_type_name(EventType t);
EventType parse_event_type(std::string_view name);
std::string_view role_name(Role r);  // "A" or "B"
Role parse_role(std::string_view name);

struct TranscriptEvent {
  std::size_t seq = 0;
  EventType type = EventType::emit;
  /// Emitter for emit and drop events, receiver for deliver events.
  Role party = Role::initiator;
  Frame frame;
  /// Adversary tag: relay, flip01, flip10, insert, delete, replay, forge,
  /// replace; "-" for emissions.
  std::string op = "-";
  PartyStatus status_a = PartyStatus::running;
  PartyStatus status_b = PartyStatus::running;
  /// For delivered data and response frames: per-row prefix length the
  /// receiver checks, and how much of it the adversary had seen.
  std::size_t demand = 0;
  std::size_t known = 0;

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

struct Transcript {
  std::uint64_t trial = 0;
  /// Schedule unit and rows per prefix, for the phase annotator.
  std::size_t unit = 1;
  std::size_t rows = 1;
  bool truncated = false;
  std::vector<TranscriptEvent> events;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// One header line `# trial=.. unit=.. rows=.. truncated=..` followed by one
/// `key=value` line per event.
std::string transcript_to_text(const Transcript& t);
/// Parses one or more transcripts. Throws FormatError on malformed lines.
std::vector<Transcript> parse_transcripts(std::string_view text);

// ---- Session driver -----------------------------------------------------------------

/// Public session parameters plus the calibration-only truth oracle.
struct SessionSpec {
  std::uint64_t trial = 0;
  ChallengeSchedule schedule;
  std::size_t rows = 1;
  /// Seed payload length per frame, for forging seeds.
  std::size_t seed_bits = 0;
  /// Deliveries before both parties are aborted.
  std::size_t frame_cap = 1000;
  std::uint64_t eve_seed = 0;
  /// Row-wise prefix of Ext(w, seed) of the given per-row length, flattened.
  /// Only the oracle guess source reads it.
  std::function<BitString(const BitString& seed, std::size_t len)> truth;
};

class Channel;
struct SessionResult;

/// Adversary controlling every delivery.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  /// Called once per emitted frame, in emission order.
  virtual void on_frame(Role from, const Frame& frame, Channel& ch) = 0;
  /// Called when no emitted frame is pending; returns true if it acted.
  virtual bool on_idle(Channel&) { return false; }
};

class Channel {
 public:
  Channel(Party& a, Party& b, const SessionSpec& spec, Transcript& log);

  /// Hands `frame` to `to` (its direction is set to match) and queues the
  /// reply frames. A no-op once the frame cap is reached.
  void deliver(Role to, Frame frame, std::string op, std::size_t demand = 0,
               std::size_t known = 0);
  void drop(Role from, const Frame& frame, std::string op);

  std::optional<Expectation> awaiting(Role r) const { return party(r).awaiting(); }
  bool running(Role r) const { return party(r).running(); }
  const SessionSpec& spec() const noexcept { return spec_; }
  Rng& rng() noexcept { return rng_; }
  bool capped() const noexcept { return capped_; }
  std::size_t deliveries() const noexcept { return deliveries_; }

 private:
  friend SessionResult run_session(Party& a, Party& b, Strategy& eve, const SessionSpec& spec);
  const Party& party(Role r) const { return r == Role::initiator ? a_ : b_; }
  Party& party(Role r) { return r == Role::initiator ? a_ : b_; }
  void log(EventType type, Role party, const Frame& f, std::string op, std::size_t demand,
           std::size_t known);
  void emit_all(Role from, std::vector<Frame> frames);

  Party& a_;
  Party& b_;
  const SessionSpec& spec_;
  Transcript& log_;
  Rng rng_;
  std::vector<std::pair<Role, Frame>> pending_;
  std::size_t pending_head_ = 0;
  std::size_t deliveries_ = 0;
  bool capped_ = false;
};

struct SessionResult {
  Transcript transcript;
  std::size_t deliveries = 0;
  bool capped = false;
};

/// Starts both parties and lets `eve` route every frame until she goes idle
/// or the frame cap is hit. Parties still running at the end are aborted.
SessionResult run_session(Party& a, Party& b, Strategy& eve, const SessionSpec& spec);

// ---- Strategies -------------------------------------------------------------------

/// Forwards every frame unchanged.
class PassiveEve final : public Strategy {
 public:
  std::string name() const override { return "passive"; }
  void on_frame(Role from, const Frame& frame, Channel& ch) override;
};

/// Discards every frame.
class DropAllEve final : public Strategy {
 public:
  std::string name() const override { return "drop_all"; }
  void on_frame(Role from, const Frame& frame, Channel& ch) override;
};

/// Operation on the k-th data frame (0-based) of the attacked stream, or on
/// the k-th seed for `replay`.
struct EditOp {
  enum class Kind : std::uint8_t { set0, set1, flip, insert0, insert1, del, replay };
  Kind kind = Kind::flip;
  std::size_t index = 0;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

enum class GuessSource : std::uint8_t {
  uniform,
  zeros,
  /// Calibration only: with probability p the true bits, otherwise the truth
  /// with one unseen bit flipped.
  oracle,
};

struct EveConfig {
  std::vector<EditOp> ops;
  /// Stream whose data frames the ops address.
  Direction stream = Direction::a_to_b;
  GuessSource guess = GuessSource::uniform;
  double oracle_p = 0.0;
  /// Replacement for every plaintext frame.
  std::optional<BitString> plaintext;
  /// Complete stalled parties with replayed seeds, forged responses and
  /// filler data.
  bool keep_alive = true;
};

/// Man in the middle that rewrites the attacked stream bit by bit. Every
/// delivery is rebuilt at the receiver's position from the prefixes the
/// adversary has seen, topped up with guessed bits.
class EditingEve final : public Strategy {
 public:
  explicit EditingEve(EveConfig config);
  std::string name() const override;
  void on_frame(Role from, const Frame& frame, Channel& ch) override;
  bool on_idle(Channel& ch) override;

 private:
  /// Unused ops at a data-frame index, either the inserts or the others.
  std::vector<std::size_t> ops_at(std::size_t index, bool inserts) const;
  /// Row-wise prefix of Ext(w, own seed of `to`) of length `len`.
  BitString forge(Role to, std::size_t len, Channel& ch, std::size_t& known);
  void learn(Role from, const Frame& f);
  bool forward_data(Role to, bool flag, std::string op, Channel& ch);
  bool answer_sender(Role sender, Channel& ch);
  void pump(Channel& ch);

  EveConfig config_;
  std::size_t rows_ = 1;
  bool rows_set_ = false;
  std::map<BitString, std::vector<BitString>> known_;
  std::map<Role, BitString> own_seed_, delivered_seed_;
  std::map<Role, std::vector<std::pair<Frame, std::string>>> held_seeds_, held_plain_;
  std::vector<bool> used_;
  std::optional<BitString> last_plain_;
  std::map<Role, std::vector<BitString>> seed_history_;
  std::map<Role, std::size_t> data_count_, seed_count_, pending_;
};

/// Grammar: `passive`, `drop_all`, or `edit` followed by `;key=value`
/// options: ops=op+op+..., guess=uniform|zeros|oracle:p, stream=ab|ba,
/// pt=bits, alive=0|1. Ops: set0@k set1@k flip@k ins0@k ins1@k del@k
/// replay@k swap@i:j (flips i and j).
std::unique_ptr<Strategy> parse_strategy(std::string_view spec);
EveConfig parse_eve_config(std::string_view options);

/// Ops turning the wire string `from` into `to` along a minimum
/// insert/delete/substitute alignment.
std::vector<EditOp> retarget_ops(const BitString& from, const BitString& to);

// ---- Transcript analysis -----------------------------------------------------------

struct PhaseAnnotation {
  std::size_t first_seq = 0;
  std::size_t last_seq = 0;
  bool bad = false;
  bool challenge = false;
  std::vector<std::string> ops;
};

struct DemandRecord {
  std::size_t seq = 0;
  std::size_t phase = 0;  // index into Annotation::phases
  std::size_t demanded = 0;
  /// W-derived bits revealed in the current phase after the receiver's seed
  /// was first announced.
  std::size_t information = 0;
  /// Prefix of the demanded string revealed in earlier phases.
  std::size_t fixed = 0;
  bool challenge = false;
};

struct Annotation {
  std::vector<PhaseAnnotation> phases;
  std::vector<DemandRecord> demands;
  bool truncated = false;
  /// Consecutive bad phases with no challenge in either.
  std::size_t violations = 0;
  bool lemma_holds() const noexcept { return violations == 0; }
};

/// Splits a transcript into phases (a phase opens at a seed emission that
/// follows a non-seed emission), marks phases with insert, delete or flip01
/// tags as bad, and marks a delivery as a challenge when the demanded
/// prefix, less the part of it revealed in earlier phases, is at least
/// 2 unit longer than the bits revealed in the phase after the receiver's
/// seed was announced. Drops are charged to the phase
/// of the dropped emission, and an insert reproducing a pending frame that
/// is later dropped counts as a relay.
Annotation annotate_phases(const Transcript& t);

struct PartyAccounting {
  std::size_t fresh_bits = 0;
  std::size_t revealed_bits = 0;
  std::size_t frames = 0;
};

struct Accounting {
  PartyAccounting a, b;
  /// Maximal runs of emissions by the same party.
  std::size_t rounds = 0;
};

/// Per-party seed bits, longest data or response payload per declared
/// phase, and frame counts, from the emissions alone.
Accounting account(const Transcript& t);

}  // namespace amplify
