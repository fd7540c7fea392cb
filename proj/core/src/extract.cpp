#include <cmath>

#include "amplify/codes.hpp"
#include "amplify/error.hpp"
#include "amplify/protocol.hpp"

namespace amplify {

void ExtractConfig::validate() const {
  condenser.validate();
  if (!(x1_bits > 0 && x1_bits < x2_bits && x2_bits <= x3_bits && x3_bits <= sr_row_bits)) {
    throw ConfigError("slice widths must satisfy 0 < x1 < x2 <= x3 <= sr_row_bits");
  }
  if (r3_bits == 0 || key_bits == 0) throw ConfigError("r3 and key lengths must be positive");
  if (t_prime() >= t()) {
    throw ConfigError("t' = " + std::to_string(t_prime()) + " must be below t = " +
                      std::to_string(t()));
  }
  if (schedule.rounds() < t() + t_prime()) {
    throw ConfigError("schedule has " + std::to_string(schedule.rounds()) +
                      " rounds, need t + t' = " + std::to_string(t() + t_prime()));
  }
  const std::size_t len = schedule.data_length(t() + t_prime(), true);
  if (ext.kind == SeededKind::toeplitz &&
      ext.seed_length(condenser.n, schedule.response_length(t() + t_prime())) != x1_bits) {
    throw ConfigError("Toeplitz hashing needs seeds of n + m - 1 bits; x1 rows have " +
                      std::to_string(x1_bits) + " (C2 = " + std::to_string(len) + ")");
  }
}

std::vector<std::string> extract_warnings(const ExtractConfig& config) {
  std::vector<std::string> out;
  const std::uint64_t rows = config.rows();
  if (config.schedule.base != 4 * rows) {
    out.push_back("schedule base " + std::to_string(config.schedule.base) + " differs from 4D = " +
                  std::to_string(4 * rows));
  }
  const std::int64_t gap = schedule_min_gap(config.schedule, config.rows());
  if (gap < static_cast<std::int64_t>(2 * config.schedule.unit)) {
    out.push_back("challenge gap " + std::to_string(gap) + " is below 2 * unit");
  }
  if (config.ext.simulation_only()) out.push_back("challenge strings: " + config.ext.name());
  if (config.raz.simulation_only()) out.push_back("raz stand-in: " + config.raz.name());
  if (config.srg.simulation_only()) out.push_back("srg stand-in: " + config.srg.name());
  if (config.final_ext.simulation_only()) out.push_back("key stand-in: " + config.final_ext.name());
  return out;
}

ExtractSlices extract_slices(const BitString& source, const BitString& w,
                             const ExtractConfig& config) {
  if (source.size() != config.condenser.n) {
    throw RangeError("source has " + std::to_string(source.size()) + " bits, expected " +
                     std::to_string(config.condenser.n));
  }
  const BitMatrix condensed = somewhere_condense(source, config.condenser);
  std::vector<BitString> rows;
  rows.reserve(condensed.rows());
  for (const auto& row : condensed.row_list()) rows.push_back(config.raz(row, w, config.sr_row_bits));
  const BitMatrix sr(std::move(rows));
  return {slice(sr, config.x1_bits), slice(sr, config.x2_bits), slice(sr, config.x3_bits)};
}

BitString extract_r3(const BitMatrix& y2, const BitMatrix& x2, const ExtractConfig& config) {
  return srg_extract(y2.flatten(), x2, config.r3_bits, config.srg);
}

BitString extract_key(const BitMatrix& s3, const BitString& r3, const ExtractConfig& config) {
  return config.final_ext(s3.flatten(), r3, config.key_bits);
}

namespace {

/// Ext(w, row) for every row of a seed matrix.
BitMatrix challenge_strings(const BitString& w, const BitMatrix& seeds,
                            const ExtractConfig& config) {
  const std::size_t len = config.schedule.response_length(config.t() + config.t_prime());
  std::vector<BitString> rows;
  rows.reserve(seeds.rows());
  for (const auto& s : seeds.row_list()) rows.push_back(config.ext.extract(w, s, len));
  return BitMatrix(std::move(rows));
}

/// Alice authenticates cw(x2) over rounds 1..t, then checks Bob's cw(r3)
/// over rounds t+1..t+t'.
class ExtractInitiator final : public Party {
 public:
  ExtractInitiator(const BitString& x, BitString w, ExtractConfig config)
      : Party(Role::initiator, config.rows()), w_(std::move(w)), config_(std::move(config)) {
    slices_ = extract_slices(x, w_, config_);
    wire_ = constant_weight_encode(slices_.s2.flatten());
  }

 private:
  enum class Stage { seed, response, data, done };

  std::vector<Frame> on_start() override {
    charge_randomness(slices_.s1.total_bits());
    return {plain(FrameKind::seed, 1, slices_.s1.flatten())};
  }

  std::vector<Frame> on_frame(const Frame& f) override {
    const ChallengeSchedule& s = config_.schedule;
    const std::size_t t = config_.t();
    switch (stage_) {
      case Stage::seed: {
        if (!expected_header(f, FrameKind::seed, 1, 0) ||
            f.payload.size() != rows() * config_.x1_bits) {
          return abort("unexpected frame while awaiting a seed");
        }
        load_strings(challenge_strings(w_, BitMatrix::from_flat(f.payload, rows()), config_),
                     challenge_strings(w_, slices_.s1, config_));
        round_ = 1;
        stage_ = Stage::response;
        return {data_frame(1, 1, wire_[0], s)};
      }
      case Stage::response:
        if (!expected_header(f, FrameKind::response, 1, round_) ||
            !verifies(f.payload, s.response_length(round_))) {
          return abort("response failed verification");
        }
        if (++round_ <= t) return {data_frame(1, round_, wire_[round_ - 1], s)};
        stage_ = Stage::data;
        return {};
      case Stage::data: {
        if (!expected_header(f, FrameKind::data, 1, round_) ||
            !verifies(f.payload, s.data_length(round_, f.flag))) {
          return abort("data frame failed verification");
        }
        received_.push_back(f.flag);
        std::vector<Frame> out{response_frame(1, round_, s)};
        if (++round_ <= t + config_.t_prime()) return out;
        stage_ = Stage::done;
        const auto r3 = constant_weight_decode(received_);
        if (!r3) {
          abort("received r3 is not a constant-weight codeword");
          return out;
        }
        set_sent(slices_.s2.flatten());
        set_received(*r3);
        accept(extract_key(slices_.s3, *r3, config_));
        return out;
      }
      case Stage::done: break;
    }
    return abort("frame after completion");
  }

  Expectation expectation() const override {
    switch (stage_) {
      case Stage::seed: return {FrameKind::seed, 1, 0};
      case Stage::response: return {FrameKind::response, 1, round_};
      default: return {FrameKind::data, 1, round_};
    }
  }

  BitString w_;
  ExtractConfig config_;
  ExtractSlices slices_;
  BitString wire_, received_;
  std::size_t round_ = 0;
  Stage stage_ = Stage::seed;
};

/// Bob checks cw(x2), computes r3 = srg(y2, x2) and authenticates cw(r3).
class ExtractResponder final : public Party {
 public:
  ExtractResponder(const BitString& y, BitString w, ExtractConfig config)
      : Party(Role::responder, config.rows()), w_(std::move(w)), config_(std::move(config)) {
    slices_ = extract_slices(y, w_, config_);
  }

 private:
  enum class Stage { seed, data, response, done };

  std::vector<Frame> on_start() override {
    charge_randomness(slices_.s1.total_bits());
    return {plain(FrameKind::seed, 1, slices_.s1.flatten())};
  }

  std::vector<Frame> on_frame(const Frame& f) override {
    const ChallengeSchedule& s = config_.schedule;
    const std::size_t t = config_.t();
    switch (stage_) {
      case Stage::seed:
        if (!expected_header(f, FrameKind::seed, 1, 0) ||
            f.payload.size() != rows() * config_.x1_bits) {
          return abort("unexpected frame while awaiting a seed");
        }
        load_strings(challenge_strings(w_, BitMatrix::from_flat(f.payload, rows()), config_),
                     challenge_strings(w_, slices_.s1, config_));
        round_ = 1;
        stage_ = Stage::data;
        return {};
      case Stage::data: {
        if (!expected_header(f, FrameKind::data, 1, round_) ||
            !verifies(f.payload, s.data_length(round_, f.flag))) {
          return abort("data frame failed verification");
        }
        received_.push_back(f.flag);
        std::vector<Frame> out{response_frame(1, round_, s)};
        if (++round_ <= t) return out;
        const auto x2 = constant_weight_decode(received_);
        if (!x2) {
          abort("received x2 is not a constant-weight codeword");
          return out;
        }
        set_received(*x2);
        r3_ = extract_r3(slices_.s2, BitMatrix::from_flat(*x2, rows()), config_);
        wire_ = constant_weight_encode(r3_);
        stage_ = Stage::response;
        out.push_back(data_frame(1, round_, wire_[0], s));
        return out;
      }
      case Stage::response:
        if (!expected_header(f, FrameKind::response, 1, round_) ||
            !verifies(f.payload, s.response_length(round_))) {
          return abort("response failed verification");
        }
        if (++round_ <= t + config_.t_prime()) return {data_frame(1, round_, wire_[round_ - t - 1], s)};
        stage_ = Stage::done;
        set_sent(r3_);
        accept(extract_key(slices_.s3, r3_, config_));
        return {};
      case Stage::done: break;
    }
    return abort("frame after completion");
  }

  Expectation expectation() const override {
    switch (stage_) {
      case Stage::seed: return {FrameKind::seed, 1, 0};
      case Stage::data: return {FrameKind::data, 1, round_};
      default: return {FrameKind::response, 1, round_};
    }
  }

  BitString w_;
  ExtractConfig config_;
  ExtractSlices slices_;
  BitString wire_, received_, r3_;
  std::size_t round_ = 0;
  Stage stage_ = Stage::seed;
};

}  // namespace

PartyPair make_extract(const BitString& x, const BitString& y, const BitString& w,
                       const ExtractConfig& config) {
  config.validate();
  PartyPair p;
  p.initiator = std::make_unique<ExtractInitiator>(x, w, config);
  p.responder = std::make_unique<ExtractResponder>(y, w, config);
  return p;
}

ExtractOutcome extract_honest_outcome(const BitString& x, const BitString& y, const BitString& w,
                                      const ExtractConfig& config) {
  const ExtractSlices sx = extract_slices(x, w, config);
  const ExtractSlices sy = extract_slices(y, w, config);
  ExtractOutcome out;
  out.r3 = extract_r3(sy.s2, sx.s2, config);
  out.s_x = extract_key(sx.s3, out.r3, config);
  out.s_y = extract_key(sy.s3, out.r3, config);
  out.x1 = sx.s1;
  out.y1 = sy.s1;
  out.x2 = sx.s2;
  return out;
}

std::optional<std::pair<BitString, BitString>> extract_run(const BitString& x,
                                                           const BitString& y,
                                                           const BitString& w,
                                                           const ExtractConfig& config) {
  PartyPair p = make_extract(x, y, w, config);
  run_honest(*p.initiator, *p.responder);
  if (p.initiator->status() != PartyStatus::accepted ||
      p.responder->status() != PartyStatus::accepted) {
    return std::nullopt;
  }
  return std::make_pair(*p.initiator->output(), *p.responder->output());
}

std::pair<BitString, BitString> extracth_run(const BitString& x, const BitString& y,
                                             const BitString& w, double kx, double ky,
                                             const TwoSourceExtractor& ext, std::size_t m) {
  if (!(kx > 0.5 * static_cast<double>(x.size()) && ky > 0.5 * static_cast<double>(y.size()))) {
    throw ConfigError("the two-source protocol needs local sources of rate above 1/2");
  }
  return {ext(x, w, m), ext(y, w, m)};
}

std::pair<BitString, BitString> nextract_run(const BitString& x, const BitString& y,
                                             const BitString& w, std::size_t m,
                                             std::uint64_t session_seed) {
  return {random_oracle_two_source(x, w, m, session_seed),
          random_oracle_two_source(y, w, m, session_seed)};
}

}  // namespace amplify
