#include "amplify/protocol.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "amplify/error.hpp"

namespace amplify {

// ---- Schedule -------------------------------------------------------------------

std::size_t ChallengeSchedule::data_length(std::size_t i, bool flag) const {
  if (i == 0 || i > rounds()) throw RangeError("schedule has no round " + std::to_string(i));
  return flag ? c2[i - 1] : c1[i - 1];
}

std::size_t ChallengeSchedule::response_length(std::size_t i) const {
  if (i == 0 || i > rounds()) throw RangeError("schedule has no round " + std::to_string(i));
  return c3[i - 1];
}

std::size_t ChallengeSchedule::max_length() const noexcept { return c3.empty() ? 0 : c3.back(); }

ChallengeSchedule schedule_build(std::uint64_t base, std::size_t unit, std::size_t rounds,
                                 std::size_t ext_output_len) {
  if (base < 2) throw ConfigError("schedule base must be at least 2");
  if (unit < 1) throw ConfigError("schedule unit must be at least 1");
  ChallengeSchedule s;
  s.base = base;
  s.unit = unit;
  std::size_t value = unit;
  auto step = [&](const char* name, std::size_t i) {
    if (__builtin_mul_overflow(value, base, &value)) {
      throw ConfigError(std::string(name) + "[" + std::to_string(i) + "] overflows");
    }
    return value;
  };
  for (std::size_t i = 1; i <= rounds; ++i) {
    s.c1.push_back(step("C1", i));
    s.c2.push_back(step("C2", i));
    s.c3.push_back(step("C3", i));
  }
  if (s.max_length() > ext_output_len) {
    throw ConfigError("C3[" + std::to_string(rounds) + "] = " + std::to_string(s.max_length()) +
                      " exceeds the extractor output of " + std::to_string(ext_output_len) +
                      " bits");
  }
  return s;
}

std::int64_t schedule_min_gap(const ChallengeSchedule& s, std::size_t rows) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  const auto r = static_cast<std::int64_t>(rows);
  for (std::size_t i = 0; i < s.rounds(); ++i) {
    const auto c1 = static_cast<std::int64_t>(s.c1[i]);
    const auto c2 = static_cast<std::int64_t>(s.c2[i]);
    const auto c3 = static_cast<std::int64_t>(s.c3[i]);
    const std::int64_t p2 = i ? static_cast<std::int64_t>(s.c2[i - 1]) : 0;
    const std::int64_t p3 = i ? static_cast<std::int64_t>(s.c3[i - 1]) : 0;
    best = std::min({best, c1 - r * (p2 + p3), c2 - r * (c1 + p3), c3 - r * (c2 + p3)});
  }
  return best;
}

// ---- Names ------------------------------------------------------------------------

std::string_view direction_name(Direction d) { return d == Direction::a_to_b ? "ab" : "ba"; }

Direction parse_direction(std::string_view name) {
  if (name == "ab") return Direction::a_to_b;
  if (name == "ba") return Direction::b_to_a;
  throw FormatError("unknown direction '" + std::string(name) + "'");
}

std::string_view frame_kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::seed: return "seed";
    case FrameKind::data: return "data";
    case FrameKind::response: return "response";
    case FrameKind::plaintext: return "plaintext";
    case FrameKind::final: return "final";
  }
  return "?";
}

FrameKind parse_frame_kind(std::string_view name) {
  for (FrameKind k : {FrameKind::seed, FrameKind::data, FrameKind::response, FrameKind::plaintext,
                      FrameKind::final}) {
    if (frame_kind_name(k) == name) return k;
  }
  throw FormatError("unknown frame kind '" + std::string(name) + "'");
}

std::string_view party_status_name(PartyStatus s) {
  switch (s) {
    case PartyStatus::running: return "running";
    case PartyStatus::accepted: return "accepted";
    case PartyStatus::aborted: return "aborted";
  }
  return "?";
}

PartyStatus parse_party_status(std::string_view name) {
  for (PartyStatus s : {PartyStatus::running, PartyStatus::accepted, PartyStatus::aborted}) {
    if (party_status_name(s) == name) return s;
  }
  throw FormatError("unknown party status '" + std::string(name) + "'");
}

// ---- Local randomness -----------------------------------------------------------------

LocalRandomness::LocalRandomness(std::uint64_t seed, std::size_t budget_bits)
    : rng_(seed), budget_(budget_bits) {}

BitString LocalRandomness::draw(std::size_t nbits) {
  if (nbits > budget_ - used_) {
    throw BudgetExhausted("local randomness budget of " + std::to_string(budget_) +
                          " bits exhausted");
  }
  used_ += nbits;
  return random_bits(rng_, nbits);
}

// ---- Party --------------------------------------------------------------------------

std::vector<Frame> Party::start() {
  if (!running()) return {};
  auto out = on_start();
  ledger_.frames_sent += out.size();
  return out;
}

std::vector<Frame> Party::receive(const Frame& frame) {
  if (!running()) return {};
  auto out = on_frame(frame);
  ledger_.frames_sent += out.size();
  return out;
}

std::optional<Expectation> Party::awaiting() const {
  if (!running()) return std::nullopt;
  return expectation();
}

void Party::force_abort(std::string reason) {
  if (running()) abort(std::move(reason));
}

std::vector<Frame> Party::abort(std::string reason) {
  status_ = PartyStatus::aborted;
  reason_ = std::move(reason);
  output_.reset();
  received_.reset();
  return {};
}

void Party::accept(BitString result) {
  status_ = PartyStatus::accepted;
  output_ = std::move(result);
}

void Party::load_strings(BitMatrix reveal, BitMatrix verify) {
  reveal_ = std::move(reveal);
  verify_ = std::move(verify);
  reveal_max_ = 0;
}

BitString Party::reveal_prefix(std::size_t len) {
  if (len > reveal_max_) {
    ledger_.revealed_bits += rows_ * (len - reveal_max_);
    reveal_max_ = len;
  }
  return rows_ == 1 ? prefix(reveal_.row(0), len) : slice(reveal_, len).flatten();
}

Frame Party::data_frame(std::size_t phase, std::size_t round, bool flag,
                        const ChallengeSchedule& s) {
  return Frame{outgoing(), FrameKind::data, flag, phase, round,
               reveal_prefix(s.data_length(round, flag))};
}

Frame Party::response_frame(std::size_t phase, std::size_t round, const ChallengeSchedule& s) {
  return Frame{outgoing(), FrameKind::response, false, phase, round,
               reveal_prefix(s.response_length(round))};
}

bool Party::expected_header(const Frame& f, FrameKind kind, std::size_t phase,
                            std::size_t round) const {
  return f.dir != outgoing() && f.kind == kind && f.phase == phase && f.round == round;
}

bool Party::verifies(const BitString& payload, std::size_t len) const {
  if (payload.size() != rows_ * len || len > verify_.row_length()) return false;
  if (rows_ == 1) return payload == prefix(verify_.row(0), len);
  return payload == slice(verify_, len).flatten();
}

Frame Party::plain(FrameKind kind, std::size_t phase, BitString payload) const {
  return Frame{outgoing(), kind, false, phase, 0, std::move(payload)};
}

// ---- Honest execution --------------------------------------------------------------

std::size_t run_honest(Party& a, Party& b, std::size_t frame_cap) {
  std::deque<Frame> queue;
  for (auto& f : a.start()) queue.push_back(std::move(f));
  for (auto& f : b.start()) queue.push_back(std::move(f));
  std::size_t delivered = 0;
  while (!queue.empty()) {
    if (delivered == frame_cap) {
      a.force_abort("frame cap reached");
      b.force_abort("frame cap reached");
      break;
    }
    const Frame f = std::move(queue.front());
    queue.pop_front();
    Party& to = f.dir == Direction::a_to_b ? b : a;
    ++delivered;
    for (auto& g : to.receive(f)) queue.push_back(std::move(g));
  }
  a.force_abort("channel went silent");
  b.force_abort("channel went silent");
  return delivered;
}

// ---- Feasibility ------------------------------------------------------------------------

std::vector<std::string> check_auth_feasibility(double k, std::size_t ell,
                                                const AuthConfig& config,
                                                FeasibilityPolicy policy) {
  std::vector<std::string> violations;
  const double need = 10.0 * std::pow(static_cast<double>(config.schedule.base),
                                       3.0 * static_cast<double>(config.t)) *
                      static_cast<double>(ell);
  if (k < need) {
    violations.push_back("entropy precondition k >= 10 * " +
                         std::to_string(config.schedule.base) + "^(3t) * ell fails: k = " +
                         std::to_string(k) + ", need " + std::to_string(need));
  }
  if (config.ext.kind == SeededKind::toeplitz &&
      static_cast<double>(config.schedule.max_length()) > k) {
    violations.push_back("Toeplitz output C3[t] = " +
                         std::to_string(config.schedule.max_length()) +
                         " exceeds the source min-entropy " + std::to_string(k));
  }
  if (policy == FeasibilityPolicy::strict && !violations.empty()) {
    throw ConfigError(violations.front());
  }
  return violations;
}

}  // namespace amplify
