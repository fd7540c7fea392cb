#include <cmath>

#include "amplify/error.hpp"
#include "amplify/protocol.hpp"

namespace amplify {

BitString pad_to_multiple(const BitString& m, std::size_t t) {
  if (t == 0) throw ConfigError("padding unit must be positive");
  BitString out = m;
  if (out.size() % t == 0) return out;
  out.push_back(true);
  while (out.size() % t) out.push_back(false);
  return out;
}

namespace {

/// Weight the padded string adds beyond the message itself.
std::size_t pad_weight(std::size_t bits, std::size_t t) { return bits % t ? 1 : 0; }

std::size_t round_up(std::size_t bits, std::size_t t) { return (bits + t - 1) / t * t; }

}  // namespace

AuthConfig make_auth_config(std::size_t n, std::size_t t, std::uint64_t base,
                            const SeededExtractor& ext, std::size_t ext_output_limit) {
  if (t == 0) throw ConfigError("t must be positive");
  AuthConfig c;
  c.t = t;
  c.schedule = schedule_build(base, t, t, ext_output_limit);
  c.ext = ext;
  c.seed_bits = ext.seed_length(n, c.schedule.max_length());
  return c;
}

std::size_t AuthProgram::wire_bits(std::size_t t) const {
  const std::size_t raw = mode == AuthMode::edit ? book->lambda_c() : message_bits;
  return round_up(raw, t);
}

std::size_t AuthProgram::phases(std::size_t t) const { return wire_bits(t) / t; }

BitString AuthProgram::wire(const BitString& message, std::size_t t) const {
  if (message.size() != message_bits) {
    throw RangeError("message has " + std::to_string(message.size()) + " bits, expected " +
                     std::to_string(message_bits));
  }
  return pad_to_multiple(mode == AuthMode::edit ? book->encode(message) : message, t);
}

// ---- Initiator ------------------------------------------------------------------------

AuthInitiator::AuthInitiator(BitString w, std::vector<BitString> messages, AuthProgram program,
                             AuthConfig config, LocalRandomness randomness, KeyStage key)
    : Party(Role::initiator),
      w_(std::move(w)),
      messages_(std::move(messages)),
      program_(std::move(program)),
      config_(std::move(config)),
      randomness_(std::move(randomness)),
      key_(std::move(key)) {
  if (messages_.size() != program_.units) throw ConfigError("message count differs from units");
  if (program_.mode == AuthMode::edit &&
      (!program_.book || program_.book->lambda_m() != program_.message_bits)) {
    throw ConfigError("edit mode needs a codebook for the message length");
  }
  if (config_.schedule.rounds() != config_.t) throw ConfigError("schedule must have t rounds");
}

std::vector<Frame> AuthInitiator::on_start() { return begin_unit(); }

std::vector<Frame> AuthInitiator::begin_unit() {
  wire_ = program_.wire(messages_[unit_], config_.t);
  phase_in_unit_ = 0;
  std::vector<Frame> out;
  if (program_.mode == AuthMode::edit) {
    out.push_back(plain(FrameKind::plaintext, phase_ + 1, messages_[unit_]));
  }
  for (auto& f : begin_phase()) out.push_back(std::move(f));
  return out;
}

std::vector<Frame> AuthInitiator::begin_phase() {
  ++phase_;
  own_seed_ = randomness_.draw(config_.seed_bits);
  charge_randomness(config_.seed_bits);
  stage_ = Stage::seed;
  return {plain(FrameKind::seed, phase_, own_seed_)};
}

std::vector<Frame> AuthInitiator::on_frame(const Frame& f) {
  const ChallengeSchedule& s = config_.schedule;
  switch (stage_) {
    case Stage::seed: {
      if (!expected_header(f, FrameKind::seed, phase_, 0) ||
          f.payload.size() != config_.seed_bits) {
        return abort("unexpected frame while awaiting a seed");
      }
      const std::size_t len = s.max_length();
      load_strings(BitMatrix::single(config_.ext.extract(w_, f.payload, len)),
                   BitMatrix::single(config_.ext.extract(w_, own_seed_, len)));
      round_ = 1;
      stage_ = Stage::response;
      return {data_frame(phase_, round_, wire_[phase_in_unit_ * config_.t], s)};
    }
    case Stage::response: {
      if (!expected_header(f, FrameKind::response, phase_, round_) ||
          !verifies(f.payload, s.response_length(round_))) {
        return abort("response failed verification");
      }
      if (round_ < config_.t) {
        ++round_;
        return {data_frame(phase_, round_, wire_[phase_in_unit_ * config_.t + round_ - 1], s)};
      }
      if (++phase_in_unit_ < program_.phases(config_.t)) return begin_phase();
      if (++unit_ < program_.units) return begin_unit();
      return finish();
    }
    case Stage::done: break;
  }
  return abort("frame after completion");
}

std::vector<Frame> AuthInitiator::finish() {
  stage_ = Stage::done;
  BitString all;
  for (const auto& m : messages_) all.append(m);
  set_sent(all);
  if (key_.key_bits) {
    accept(key_.ext.extract(w_, prefix(all, key_.seed_bits), key_.key_bits));
  } else {
    accept(std::move(all));
  }
  return {};
}

Expectation AuthInitiator::expectation() const {
  if (stage_ == Stage::seed) return {FrameKind::seed, phase_, 0};
  return {FrameKind::response, phase_, round_};
}

// ---- Responder ------------------------------------------------------------------------

AuthResponder::AuthResponder(BitString w, AuthProgram program, AuthConfig config,
                             LocalRandomness randomness, std::vector<std::size_t> expected_weights,
                             KeyStage key)
    : Party(Role::responder),
      w_(std::move(w)),
      program_(std::move(program)),
      config_(std::move(config)),
      randomness_(std::move(randomness)),
      weights_(std::move(expected_weights)),
      key_(std::move(key)) {
  if (program_.mode == AuthMode::raw && weights_.size() != program_.units) {
    throw ConfigError("raw mode needs one expected weight per unit");
  }
  if (program_.mode == AuthMode::edit &&
      (!program_.book || program_.book->lambda_m() != program_.message_bits)) {
    throw ConfigError("edit mode needs a codebook for the message length");
  }
  if (config_.schedule.rounds() != config_.t) throw ConfigError("schedule must have t rounds");
}

std::vector<Frame> AuthResponder::on_start() { return begin_unit(); }

std::vector<Frame> AuthResponder::begin_unit() {
  phase_in_unit_ = 0;
  wire_ = BitString();
  if (program_.mode == AuthMode::edit) {
    stage_ = Stage::plaintext;
    return {};
  }
  return begin_phase();
}

std::vector<Frame> AuthResponder::begin_phase() {
  ++phase_;
  own_seed_ = randomness_.draw(config_.seed_bits);
  charge_randomness(config_.seed_bits);
  stage_ = Stage::seed;
  return {plain(FrameKind::seed, phase_, own_seed_)};
}

std::vector<Frame> AuthResponder::on_frame(const Frame& f) {
  const ChallengeSchedule& s = config_.schedule;
  switch (stage_) {
    case Stage::plaintext:
      if (!expected_header(f, FrameKind::plaintext, phase_ + 1, 0) ||
          f.payload.size() != program_.message_bits) {
        return abort("unexpected frame while awaiting the plaintext");
      }
      plaintext_ = f.payload;
      return begin_phase();
    case Stage::seed: {
      if (!expected_header(f, FrameKind::seed, phase_, 0) ||
          f.payload.size() != config_.seed_bits) {
        return abort("unexpected frame while awaiting a seed");
      }
      const std::size_t len = s.max_length();
      load_strings(BitMatrix::single(config_.ext.extract(w_, f.payload, len)),
                   BitMatrix::single(config_.ext.extract(w_, own_seed_, len)));
      round_ = 1;
      stage_ = Stage::data;
      return {};
    }
    case Stage::data: {
      if (!expected_header(f, FrameKind::data, phase_, round_) ||
          !verifies(f.payload, s.data_length(round_, f.flag))) {
        return abort("data frame failed verification");
      }
      wire_.push_back(f.flag);
      std::vector<Frame> out{response_frame(phase_, round_, s)};
      if (round_ < config_.t) {
        ++round_;
        return out;
      }
      if (++phase_in_unit_ < program_.phases(config_.t)) {
        for (auto& g : begin_phase()) out.push_back(std::move(g));
        return out;
      }
      return end_unit(std::move(out));
    }
    case Stage::done: break;
  }
  return abort("frame after completion");
}

std::vector<Frame> AuthResponder::end_unit(std::vector<Frame> out) {
  const std::size_t t = config_.t;
  BitString message;
  if (program_.mode == AuthMode::edit) {
    const std::size_t expected = program_.book->weight() + pad_weight(program_.book->lambda_c(), t);
    if (weight(wire_) != expected) {
      abort("weight check failed");
      return out;
    }
    if (wire_ != program_.wire(plaintext_, t)) {
      abort("codeword does not match the plaintext");
      return out;
    }
    message = plaintext_;
  } else {
    const std::size_t bits = program_.message_bits;
    if (weight(wire_) != weights_[unit_] + pad_weight(bits, t)) {
      abort("weight check failed");
      return out;
    }
    message = prefix(wire_, bits);
    // The padding is public; a weight-preserving move into it must not pass.
    if (substring(wire_, bits, wire_.size() - bits) !=
        substring(pad_to_multiple(BitString(bits), t), bits, wire_.size() - bits)) {
      abort("padding mismatch");
      return out;
    }
  }
  accepted_.append(message);
  if (++unit_ < program_.units) {
    for (auto& g : begin_unit()) out.push_back(std::move(g));
    return out;
  }
  stage_ = Stage::done;
  set_received(accepted_);
  if (key_.key_bits) {
    accept(key_.ext.extract(w_, prefix(accepted_, key_.seed_bits), key_.key_bits));
  } else {
    accept(accepted_);
  }
  return out;
}

Expectation AuthResponder::expectation() const {
  switch (stage_) {
    case Stage::plaintext: return {FrameKind::plaintext, phase_ + 1, 0};
    case Stage::seed: return {FrameKind::seed, phase_, 0};
    default: return {FrameKind::data, phase_, round_};
  }
}

// ---- Factories -------------------------------------------------------------------------

namespace {

std::vector<BitString> split_units(const BitString& m, std::size_t unit_bits) {
  std::vector<BitString> out;
  for (std::size_t i = 0; i < m.size(); i += unit_bits) out.push_back(substring(m, i, unit_bits));
  return out;
}

}  // namespace

PartyPair make_sauth(const BitString& w, const BitString& m, const AuthConfig& config,
                     const PartySeeds& seeds) {
  if (m.size() != config.t) throw ConfigError("a single phase authenticates exactly t bits");
  return make_auth(w, m, config, seeds);
}

PartyPair make_auth(const BitString& w, const BitString& m, const AuthConfig& config,
                    const PartySeeds& seeds) {
  AuthProgram program{AuthMode::raw, m.size(), 1, nullptr};
  PartyPair p;
  p.initiator = std::make_unique<AuthInitiator>(
      w, std::vector<BitString>{m}, program, config,
      LocalRandomness(seeds.initiator, seeds.budget_bits));
  p.responder = std::make_unique<AuthResponder>(
      w, program, config, LocalRandomness(seeds.responder, seeds.budget_bits),
      std::vector<std::size_t>{weight(m)});
  return p;
}

PartyPair make_nauth(const BitString& w, const BitString& m,
                     std::shared_ptr<const EditCodebook> book, const AuthConfig& config,
                     const PartySeeds& seeds) {
  if (!book) throw ConfigError("edit mode needs a codebook");
  const std::size_t unit = book->lambda_m();
  if (m.size() % unit) throw ConfigError("message length must be a multiple of lambda_m");
  AuthProgram program{AuthMode::edit, unit, m.size() / unit, std::move(book)};
  PartyPair p;
  p.initiator = std::make_unique<AuthInitiator>(
      w, split_units(m, unit), program, config,
      LocalRandomness(seeds.initiator, seeds.budget_bits));
  p.responder = std::make_unique<AuthResponder>(
      w, program, config, LocalRandomness(seeds.responder, seeds.budget_bits));
  return p;
}

std::optional<BitString> auth_run(const BitString& w, const BitString& m, const AuthConfig& config,
                                  const PartySeeds& seeds) {
  PartyPair p = make_auth(w, m, config, seeds);
  run_honest(*p.initiator, *p.responder);
  return p.responder->received_message();
}

std::optional<BitString> nauth_run(const BitString& w, const BitString& m,
                                   std::shared_ptr<const EditCodebook> book,
                                   const AuthConfig& config, const PartySeeds& seeds) {
  PartyPair p = make_nauth(w, m, std::move(book), config, seeds);
  run_honest(*p.initiator, *p.responder);
  return p.responder->received_message();
}

// ---- Key agreement ---------------------------------------------------------------------

std::size_t key_length(double k, double spent_bits, double eps) {
  if (!(eps > 0 && eps < 1)) throw ConfigError("eps must lie in (0, 1)");
  const double v = std::floor(k - spent_bits - 2.0 * std::log2(1.0 / eps));
  if (v < 1) {
    throw ConfigError("no key remains: k - spent - 2 log2(1/eps) = " + std::to_string(v));
  }
  return static_cast<std::size_t>(v);
}

std::size_t auth_revealed_bound(const AuthConfig& config, std::size_t phases, std::size_t rows) {
  if (config.schedule.rounds() == 0) return 0;
  return phases * rows * (config.schedule.c2.back() + config.schedule.c3.back());
}

namespace {

std::size_t key_seed_bits(std::size_t n, const KeyAgreementConfig& c) {
  return c.key_ext.seed_length(n, c.key_bits);
}

}  // namespace

PartyPair make_key_agreement(const BitString& w, const KeyAgreementConfig& config,
                             const PartySeeds& seeds) {
  if (!config.book) throw ConfigError("key agreement needs a codebook");
  if (config.key_bits == 0) throw ConfigError("key length must be positive");
  const std::size_t unit = config.book->lambda_m();
  const std::size_t d = key_seed_bits(w.size(), config);
  const std::size_t units = (d + unit - 1) / unit;
  AuthProgram program{AuthMode::edit, unit, units, config.book};
  KeyStage stage{config.key_bits, d, config.key_ext};

  LocalRandomness alice(seeds.initiator, seeds.budget_bits);
  const BitString seed = alice.draw(units * unit);
  auto initiator = std::make_unique<AuthInitiator>(w, split_units(seed, unit), program,
                                                   config.auth, std::move(alice), stage);
  PartyPair p;
  p.initiator = std::move(initiator);
  p.responder = std::make_unique<AuthResponder>(
      w, program, config.auth, LocalRandomness(seeds.responder, seeds.budget_bits),
      std::vector<std::size_t>{}, stage);
  return p;
}

BitString derive_key(const BitString& w, const KeyAgreementConfig& config,
                     const BitString& authenticated_seed) {
  const std::size_t d = key_seed_bits(w.size(), config);
  return config.key_ext.extract(w, prefix(authenticated_seed, d), config.key_bits);
}

}  // namespace amplify
