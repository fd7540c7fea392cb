#include "amplify/adversary.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <tuple>

#include "amplify/error.hpp"

namespace amplify {

// ---- Names ----------------------------------------------------------------------------

std::string_view event_type_name(EventType t) {
  switch (t) {
    case EventType::emit: return "emit";
    case EventType::deliver: return "deliver";
    case EventType::drop: return "drop";
  }
  return "?";
}

EventType parse_event_type(std::string_view name) {
  for (EventType t : {EventType::emit, EventType::deliver, EventType::drop}) {
    if (event_type_name(t) == name) return t;
  }
  throw FormatError("unknown event type '" + std::string(name) + "'");
}

std::string_view role_name(Role r) { return r == Role::initiator ? "A" : "B"; }

Role parse_role(std::string_view name) {
  if (name == "A") return Role::initiator;
  if (name == "B") return Role::responder;
  throw FormatError("unknown party '" + std::string(name) + "'");
}

namespace {

Role other_role(Role r) { return r == Role::initiator ? Role::responder : Role::initiator; }
Direction toward(Role to) { return to == Role::responder ? Direction::a_to_b : Direction::b_to_a; }
Role sender_of(Direction d) { return d == Direction::a_to_b ? Role::initiator : Role::responder; }

// ---- Text format -------------------------------------------------------------------

std::string payload_text(const BitString& p) { return p.empty() ? "-" : p.to_string(); }

std::uint64_t parse_number(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("bad number for '" + std::string(key) + "': '" + std::string(v) + "'");
  }
  return out;
}

/// Splits `key=value` tokens separated by single spaces.
std::map<std::string, std::string, std::less<>> fields(std::string_view line) {
  std::map<std::string, std::string, std::less<>> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view tok = line.substr(pos, end - pos);
    if (!tok.empty()) {
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("token without '=': '" + std::string(tok) + "'");
      }
      out.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    pos = end + 1;
  }
  return out;
}

const std::string& need(const std::map<std::string, std::string, std::less<>>& f,
                        std::string_view key) {
  const auto it = f.find(key);
  if (it == f.end()) throw FormatError("missing field '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

std::string transcript_to_text(const Transcript& t) {
  std::ostringstream out;
  out << "# trial=" << t.trial << " unit=" << t.unit << " rows=" << t.rows
      << " truncated=" << (t.truncated ? 1 : 0) << '\n';
  for (const auto& e : t.events) {
    const Frame& f = e.frame;
    out << "trial=" << t.trial << " seq=" << e.seq << " ev=" << event_type_name(e.type)
        << " party=" << role_name(e.party) << " dir=" << direction_name(f.dir)
        << " kind=" << frame_kind_name(f.kind) << " flag=" << (f.flag ? 1 : 0)
        << " phase=" << f.phase << " round=" << f.round << " op=" << e.op
        << " payload=" << payload_text(f.payload) << " status=A:"
        << party_status_name(e.status_a) << ",B:" << party_status_name(e.status_b)
        << " demand=" << e.demand << " known=" << e.known << '\n';
  }
  return out.str();
}

std::vector<Transcript> parse_transcripts(std::string_view text) {
  std::vector<Transcript> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    try {
      if (line.front() == '#') {
        const auto f = fields(line.substr(1));
        Transcript t;
        t.trial = parse_number("trial", need(f, "trial"));
        t.unit = parse_number("unit", need(f, "unit"));
        t.rows = parse_number("rows", need(f, "rows"));
        t.truncated = parse_number("truncated", need(f, "truncated")) != 0;
        out.push_back(std::move(t));
        continue;
      }
      if (out.empty()) throw FormatError("event before a transcript header");
      const auto f = fields(line);
      Transcript& t = out.back();
      if (parse_number("trial", need(f, "trial")) != t.trial) {
        throw FormatError("event trial differs from its header");
      }
      TranscriptEvent e;
      e.seq = parse_number("seq", need(f, "seq"));
      e.type = parse_event_type(need(f, "ev"));
      e.party = parse_role(need(f, "party"));
      e.frame.dir = parse_direction(need(f, "dir"));
      e.frame.kind = parse_frame_kind(need(f, "kind"));
      e.frame.flag = parse_number("flag", need(f, "flag")) != 0;
      e.frame.phase = parse_number("phase", need(f, "phase"));
      e.frame.round = parse_number("round", need(f, "round"));
      e.op = need(f, "op");
      const std::string& payload = need(f, "payload");
      e.frame.payload = payload == "-" ? BitString() : BitString::from_string(payload);
      const std::string& status = need(f, "status");
      const auto comma = status.find(',');
      if (comma == std::string::npos || status.rfind("A:", 0) != 0 ||
          status.compare(comma + 1, 2, "B:") != 0) {
        throw FormatError("bad status '" + status + "'");
      }
      e.status_a = parse_party_status(std::string_view(status).substr(2, comma - 2));
      e.status_b = parse_party_status(std::string_view(status).substr(comma + 3));
      e.demand = parse_number("demand", need(f, "demand"));
      e.known = parse_number("known", need(f, "known"));
      t.events.push_back(std::move(e));
    } catch (const FormatError& err) {
      throw FormatError("transcript line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return out;
}

// ---- Channel --------------------------------------------------------------------------

Channel::Channel(Party& a, Party& b, const SessionSpec& spec, Transcript& log)
    : a_(a), b_(b), spec_(spec), log_(log), rng_(spec.eve_seed) {}

void Channel::log(EventType type, Role who, const Frame& f, std::string op, std::size_t demand,
                  std::size_t known) {
  TranscriptEvent e;
  e.seq = log_.events.size();
  e.type = type;
  e.party = who;
  e.frame = f;
  e.op = std::move(op);
  e.status_a = a_.status();
  e.status_b = b_.status();
  e.demand = demand;
  e.known = known;
  log_.events.push_back(std::move(e));
}

void Channel::emit_all(Role from, std::vector<Frame> frames) {
  for (auto& f : frames) {
    log(EventType::emit, from, f, "-", 0, 0);
    pending_.emplace_back(from, std::move(f));
  }
}

void Channel::deliver(Role to, Frame frame, std::string op, std::size_t demand,
                      std::size_t known) {
  if (capped_) return;
  if (deliveries_ >= spec_.frame_cap) {
    capped_ = true;
    return;
  }
  ++deliveries_;
  frame.dir = toward(to);
  auto out = party(to).receive(frame);
  log(EventType::deliver, to, frame, std::move(op), demand, known);
  emit_all(to, std::move(out));
}

void Channel::drop(Role from, const Frame& frame, std::string op) {
  log(EventType::drop, from, frame, std::move(op), 0, 0);
}

SessionResult run_session(Party& a, Party& b, Strategy& eve, const SessionSpec& spec) {
  SessionResult result;
  result.transcript.trial = spec.trial;
  result.transcript.unit = spec.schedule.unit;
  result.transcript.rows = spec.rows;
  {
    Channel ch(a, b, spec, result.transcript);
    ch.emit_all(Role::initiator, a.start());
    ch.emit_all(Role::responder, b.start());
    while (!ch.capped_) {
      if (ch.pending_head_ < ch.pending_.size()) {
        auto [from, frame] = std::move(ch.pending_[ch.pending_head_++]);
        eve.on_frame(from, frame, ch);
        continue;
      }
      if (!a.running() && !b.running()) break;
      const std::size_t before = ch.deliveries_;
      if (!eve.on_idle(ch) || (ch.deliveries_ == before && !ch.capped_)) break;
    }
    result.deliveries = ch.deliveries_;
    result.capped = ch.capped_;
  }
  result.transcript.truncated = result.capped;
  const char* reason = result.capped ? "frame cap reached" : "channel went silent";
  a.force_abort(reason);
  b.force_abort(reason);
  return result;
}

// ---- Simple strategies --------------------------------------------------------------

void PassiveEve::on_frame(Role from, const Frame& frame, Channel& ch) {
  ch.deliver(other_role(from), frame, "relay");
}

void DropAllEve::on_frame(Role from, const Frame& frame, Channel& ch) {
  ch.drop(from, frame, "drop");
}

// ---- Editing adversary -------------------------------------------------------------------

EditingEve::EditingEve(EveConfig config)
    : config_(std::move(config)), used_(config_.ops.size(), false) {
  if (config_.guess == GuessSource::oracle && !(config_.oracle_p >= 0 && config_.oracle_p <= 1)) {
    throw ConfigError("oracle probability must lie in [0, 1]");
  }
}

std::string EditingEve::name() const { return "edit"; }

std::vector<std::size_t> EditingEve::ops_at(std::size_t index, bool inserts) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < config_.ops.size(); ++i) {
    const EditOp& op = config_.ops[i];
    const bool is_insert = op.kind == EditOp::Kind::insert0 || op.kind == EditOp::Kind::insert1;
    if (op.index == index && op.kind != EditOp::Kind::replay && is_insert == inserts && !used_[i]) {
      out.push_back(i);
    }
  }
  return out;
}

void EditingEve::learn(Role from, const Frame& f) {
  if (f.kind == FrameKind::seed) {
    own_seed_[from] = f.payload;
    seed_history_[from].push_back(f.payload);
    return;
  }
  if (f.kind == FrameKind::plaintext) {
    last_plain_ = f.payload;
    return;
  }
  const auto seed = delivered_seed_.find(from);
  if (seed == delivered_seed_.end()) return;
  auto& rows = known_[seed->second];
  const std::size_t r = rows_;
  const std::size_t len = f.payload.size() / r;
  rows.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (len > rows[i].size()) rows[i] = substring(f.payload, i * len, len);
  }
}

BitString EditingEve::forge(Role to, std::size_t len, Channel& ch, std::size_t& known) {
  const BitString& key = own_seed_[to];
  const auto it = known_.find(key);
  std::vector<std::size_t> have(rows_, 0);
  known = len;
  std::size_t unknown = 0;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (it != known_.end()) have[i] = std::min(len, it->second[i].size());
    known = std::min(known, have[i]);
    unknown += len - have[i];
  }
  BitString truth;
  bool correct = false;
  if (config_.guess == GuessSource::oracle && unknown) {
    truth = ch.spec().truth(key, len);
    correct = std::bernoulli_distribution(config_.oracle_p)(ch.rng());
  }
  BitString out;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (have[i]) out.append(prefix(it->second[i], have[i]));
    const std::size_t missing = len - have[i];
    if (!missing) continue;
    switch (config_.guess) {
      case GuessSource::uniform: out.append(random_bits(ch.rng(), missing)); break;
      case GuessSource::zeros: out.append(BitString(missing)); break;
      case GuessSource::oracle: out.append(substring(truth, i * len + have[i], missing)); break;
    }
  }
  if (config_.guess == GuessSource::oracle && unknown && !correct) {
    // Flip one unseen bit.
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, unknown - 1)(ch.rng());
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t missing = len - have[i];
      if (pick < missing) {
        out.flip(i * len + have[i] + pick);
        break;
      }
      pick -= missing;
    }
  }
  return out;
}

bool EditingEve::forward_data(Role to, bool flag, std::string op, Channel& ch) {
  const auto exp = ch.awaiting(to);
  if (!exp || exp->kind != FrameKind::data) return false;
  const std::size_t len = ch.spec().schedule.data_length(exp->round, flag);
  std::size_t known = 0;
  Frame f{toward(to), FrameKind::data, flag, exp->phase, exp->round, forge(to, len, ch, known)};
  ++pending_[to];
  ch.deliver(to, std::move(f), std::move(op), len, known);
  return true;
}

bool EditingEve::answer_sender(Role sender, Channel& ch) {
  const auto exp = ch.awaiting(sender);
  if (!exp || exp->kind != FrameKind::response) return false;
  const std::size_t len = ch.spec().schedule.response_length(exp->round);
  std::size_t known = 0;
  Frame f{toward(sender), FrameKind::response, false, exp->phase, exp->round,
          forge(sender, len, ch, known)};
  ch.deliver(sender, std::move(f), known >= len ? "relay" : "forge", len, known);
  return true;
}

void EditingEve::pump(Channel& ch) {
  bool moved = true;
  while (moved && !ch.capped()) {
    moved = false;
    for (Role q : {Role::initiator, Role::responder}) {
      const auto exp = ch.awaiting(q);
      if (!exp) continue;
      auto& seeds = held_seeds_[q];
      auto& plain = held_plain_[q];
      if (exp->kind == FrameKind::seed && !seeds.empty()) {
        auto [f, op] = std::move(seeds.front());
        seeds.erase(seeds.begin());
        f.phase = exp->phase;
        f.round = 0;
        delivered_seed_[q] = f.payload;
        ch.deliver(q, std::move(f), std::move(op));
        moved = true;
      } else if (exp->kind == FrameKind::plaintext && !plain.empty()) {
        auto [f, op] = std::move(plain.front());
        plain.erase(plain.begin());
        f.phase = exp->phase;
        ch.deliver(q, std::move(f), std::move(op));
        moved = true;
      }
    }
  }
}

void EditingEve::on_frame(Role from, const Frame& frame, Channel& ch) {
  if (!rows_set_) {
    rows_ = ch.spec().rows;
    rows_set_ = true;
  }
  learn(from, frame);
  const Role to = other_role(from);
  const bool attacked = sender_of(config_.stream) == from;
  switch (frame.kind) {
    case FrameKind::seed: {
      const std::size_t k = seed_count_[from]++;
      Frame g = frame;
      std::string op = "relay";
      const auto& history = seed_history_[from];
      if (attacked && history.size() >= 2) {
        for (const EditOp& e : config_.ops) {
          if (e.kind == EditOp::Kind::replay && e.index == k) {
            g.payload = history[history.size() - 2];
            op = "replay";
          }
        }
      }
      held_seeds_[to].emplace_back(std::move(g), std::move(op));
      break;
    }
    case FrameKind::plaintext: {
      Frame g = frame;
      std::string op = "relay";
      if (config_.plaintext && *config_.plaintext != frame.payload) {
        g.payload = *config_.plaintext;
        op = "replace";
      }
      held_plain_[to].emplace_back(std::move(g), std::move(op));
      break;
    }
    case FrameKind::data: {
      bool flag = frame.flag;
      bool deleted = false;
      if (attacked) {
        const std::size_t k = data_count_[from]++;
        for (std::size_t i : ops_at(k, true)) {
          used_[i] = true;
          forward_data(to, config_.ops[i].kind == EditOp::Kind::insert1, "insert", ch);
        }
        for (std::size_t i : ops_at(k, false)) {
          used_[i] = true;
          switch (config_.ops[i].kind) {
            case EditOp::Kind::set0: flag = false; break;
            case EditOp::Kind::set1: flag = true; break;
            case EditOp::Kind::flip: flag = !flag; break;
            case EditOp::Kind::del: deleted = true; break;
            default: break;
          }
        }
      }
      if (!deleted) {
        const std::string op = flag == frame.flag ? "relay" : (flag ? "flip01" : "flip10");
        if (forward_data(to, flag, op, ch)) break;
      }
      // Deleted, or the receiver no longer takes data: answer the sender
      // ourselves.
      ch.drop(from, frame, "delete");
      answer_sender(from, ch);
      break;
    }
    case FrameKind::response: {
      auto& pending = pending_[from];
      if (pending) --pending;
      if (!pending) answer_sender(to, ch);
      break;
    }
    case FrameKind::final:
      ch.deliver(to, frame, "relay");
      break;
  }
  pump(ch);
}

bool EditingEve::on_idle(Channel& ch) {
  if (!config_.keep_alive) return false;
  const std::size_t before = ch.deliveries();
  pump(ch);
  if (ch.deliveries() != before) return true;
  for (Role q : {Role::initiator, Role::responder}) {
    const auto exp = ch.awaiting(q);
    if (!exp) continue;
    if (exp->kind == FrameKind::seed) {
      const auto& history = seed_history_[other_role(q)];
      Frame f{toward(q), FrameKind::seed, false, exp->phase, 0,
              history.empty() ? random_bits(ch.rng(), ch.spec().seed_bits) : history.back()};
      delivered_seed_[q] = f.payload;
      ch.deliver(q, std::move(f), history.empty() ? "forge" : "replay");
      return true;
    }
    if (exp->kind == FrameKind::response && answer_sender(q, ch)) return true;
  }
  for (Role q : {Role::initiator, Role::responder}) {
    const auto exp = ch.awaiting(q);
    if (!exp) continue;
    if (exp->kind == FrameKind::data) {
      // Pending trailing inserts first, else a filler 0.
      bool bit = false;
      const Role sender = other_role(q);
      if (sender_of(config_.stream) == sender) {
        const auto ins = ops_at(data_count_[sender], true);
        if (!ins.empty()) {
          used_[ins.front()] = true;
          bit = config_.ops[ins.front()].kind == EditOp::Kind::insert1;
        }
      }
      if (forward_data(q, bit, "insert", ch)) return true;
    }
    if (exp->kind == FrameKind::plaintext && last_plain_) {
      ch.deliver(q, Frame{toward(q), FrameKind::plaintext, false, exp->phase, 0, *last_plain_},
                 "replay");
      return true;
    }
  }
  return false;
}

// ---- Parsing ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = s.find(sep, pos);
    out.push_back(s.substr(pos, end == std::string_view::npos ? s.size() - pos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::vector<EditOp> parse_op(std::string_view tok) {
  const auto at = tok.find('@');
  if (at == std::string_view::npos) throw ConfigError("edit op needs '@': '" + std::string(tok) + "'");
  const std::string_view name = tok.substr(0, at), arg = tok.substr(at + 1);
  auto number = [&](std::string_view v) {
    try {
      return static_cast<std::size_t>(parse_number("op index", v));
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  };
  if (name == "swap") {
    const auto colon = arg.find(':');
    if (colon == std::string_view::npos) throw ConfigError("swap needs i:j");
    return {{EditOp::Kind::flip, number(arg.substr(0, colon))},
            {EditOp::Kind::flip, number(arg.substr(colon + 1))}};
  }
  static const std::pair<std::string_view, EditOp::Kind> kinds[] = {
      {"set0", EditOp::Kind::set0},       {"set1", EditOp::Kind::set1},
      {"flip", EditOp::Kind::flip},       {"ins0", EditOp::Kind::insert0},
      {"ins1", EditOp::Kind::insert1},    {"del", EditOp::Kind::del},
      {"replay", EditOp::Kind::replay}};
  for (const auto& [n, k] : kinds) {
    if (n == name) return {{k, number(arg)}};
  }
  throw ConfigError("unknown edit op '" + std::string(name) + "'");
}

}  // namespace

EveConfig parse_eve_config(std::string_view options) {
  EveConfig c;
  for (std::string_view opt : split(options, ';')) {
    if (opt.empty()) continue;
    const auto eq = opt.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("strategy option needs '=': '" + std::string(opt) + "'");
    }
    const std::string_view key = opt.substr(0, eq), value = opt.substr(eq + 1);
    if (key == "ops") {
      for (std::string_view tok : split(value, '+')) {
        if (tok.empty() || tok == "relay") continue;
        for (const EditOp& op : parse_op(tok)) c.ops.push_back(op);
      }
    } else if (key == "guess") {
      if (value == "uniform") {
        c.guess = GuessSource::uniform;
      } else if (value == "zeros") {
        c.guess = GuessSource::zeros;
      } else if (value.rfind("oracle:", 0) == 0) {
        c.guess = GuessSource::oracle;
        c.oracle_p = std::stod(std::string(value.substr(7)));
      } else {
        throw ConfigError("unknown guess source '" + std::string(value) + "'");
      }
    } else if (key == "stream") {
      try {
        c.stream = parse_direction(value);
      } catch (const FormatError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "pt") {
      try {
        c.plaintext = BitString::from_string(value);
      } catch (const FormatError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "alive") {
      c.keep_alive = value != "0";
    } else {
      throw ConfigError("unknown strategy option '" + std::string(key) + "'");
    }
  }
  return c;
}

std::unique_ptr<Strategy> parse_strategy(std::string_view spec) {
  if (spec == "passive") return std::make_unique<PassiveEve>();
  if (spec == "drop_all") return std::make_unique<DropAllEve>();
  if (spec == "edit" || spec.rfind("edit;", 0) == 0) {
    return std::make_unique<EditingEve>(parse_eve_config(spec.substr(4)));
  }
  throw ConfigError("unknown strategy '" + std::string(spec) + "'");
}

std::vector<EditOp> retarget_ops(const BitString& from, const BitString& to) {
  const std::size_t n = from.size(), m = to.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (from[i - 1] != to[j - 1] ? 1 : 0)});
    }
  }
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (from[i - 1] != to[j - 1] ? 1 : 0)) {
      if (from[i - 1] != to[j - 1]) {
        ops.push_back({to[j - 1] ? EditOp::Kind::set1 : EditOp::Kind::set0, i - 1});
      }
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ops.push_back({EditOp::Kind::del, i - 1});
      --i;
    } else {
      ops.push_back({to[j - 1] ? EditOp::Kind::insert1 : EditOp::Kind::insert0, i});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

// ---- Annotation ----------------------------------------------------------------------------

namespace {

// Pairs emitted frames with the deliveries and drops that consume them.
// `source[i]` is the emission a drop at event i withholds. An insert that
// reproduces a pending frame which is later dropped is a relay of that
// frame, so both events are marked in `cancelled`.
struct FrameMatch {
  std::vector<std::size_t> source;
  std::vector<bool> cancelled;
};

FrameMatch match_frames(const Transcript& t) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  FrameMatch m;
  m.source.assign(t.events.size(), none);
  m.cancelled.assign(t.events.size(), false);
  struct Pending {
    std::size_t emit;
    std::size_t insert = none;
    bool done = false;
  };
  std::vector<Pending> pending;
  auto find = [&](const Frame& f, bool skip_inserted) -> Pending* {
    for (auto& p : pending) {
      if (!p.done && !(skip_inserted && p.insert != none) && t.events[p.emit].frame == f) return &p;
    }
    return nullptr;
  };
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto& e = t.events[i];
    if (e.type == EventType::emit) {
      if (e.frame.kind != FrameKind::seed) pending.push_back({i});
    } else if (e.type == EventType::drop) {
      if (Pending* p = find(e.frame, false)) {
        p->done = true;
        m.source[i] = p->emit;
        if (p->insert != none) m.cancelled[i] = m.cancelled[p->insert] = true;
      }
    } else if (e.op == "relay") {
      if (Pending* p = find(e.frame, false)) p->done = true;
    } else if (e.op == "insert") {
      if (Pending* p = find(e.frame, true)) p->insert = i;
    }
  }
  return m;
}

}  // namespace

Annotation annotate_phases(const Transcript& t) {
  Annotation ann;
  ann.truncated = t.truncated;
  std::map<BitString, std::size_t> announced;  // seed -> seq of first emission
  std::map<BitString, std::size_t> revealed;   // string (by seed) -> longest row prefix
  std::vector<std::pair<std::size_t, std::size_t>> increments;  // (seq, new bits)
  std::vector<std::tuple<std::size_t, BitString, std::size_t>> history;  // (seq, seed, row prefix)
  std::map<Role, BitString> own, delivered;
  const FrameMatch match = match_frames(t);
  // Phase of every event. A withheld frame is withheld in the round it was
  // sent, so drops are charged to the phase of the emission.
  std::vector<std::size_t> phase_of(t.events.size(), 0);
  bool last_emit_seed = false;

  auto open_phase = [&](std::size_t seq) {
    PhaseAnnotation p;
    p.first_seq = p.last_seq = seq;
    ann.phases.push_back(std::move(p));
  };

  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto& e = t.events[i];
    const Frame& f = e.frame;
    if (e.type == EventType::emit) {
      if (f.kind == FrameKind::seed) {
        if (!last_emit_seed) open_phase(e.seq);
        announced.try_emplace(f.payload, e.seq);
        own[e.party] = f.payload;
        last_emit_seed = true;
      } else {
        last_emit_seed = false;
        const auto seed = delivered.find(e.party);
        if ((f.kind == FrameKind::data || f.kind == FrameKind::response) &&
            seed != delivered.end()) {
          const std::size_t len = f.payload.size() / t.rows;
          std::size_t& best = revealed[seed->second];
          if (len > best) {
            increments.emplace_back(e.seq, t.rows * (len - best));
            history.emplace_back(e.seq, seed->second, len);
            best = len;
          }
        }
      }
    }
    if (ann.phases.empty()) open_phase(e.seq);
    PhaseAnnotation& phase = ann.phases.back();
    phase.last_seq = e.seq;
    phase_of[i] = ann.phases.size() - 1;
    PhaseAnnotation& charged =
        match.source[i] < i ? ann.phases[phase_of[match.source[i]]] : phase;
    if (e.type != EventType::emit && e.op != "-" && e.op != "relay" && !match.cancelled[i]) {
      charged.ops.push_back(e.op);
      if (e.op == "insert" || e.op == "delete" || e.op == "flip01") charged.bad = true;
    }
    if (e.type != EventType::deliver) continue;
    if (f.kind == FrameKind::seed) {
      delivered[e.party] = f.payload;
      continue;
    }
    if (f.kind != FrameKind::data && f.kind != FrameKind::response) continue;
    const auto mine = own.find(e.party);
    if (mine == own.end()) continue;
    // Strings revealed in earlier phases are fixed: the part of the demanded
    // string among them is known, and the rest counts against what was
    // revealed in this phase after the receiver's seed went out.
    const std::size_t since = announced.at(mine->second);
    std::size_t info = 0;
    for (const auto& [seq, bits] : increments) {
      if (seq > since && seq >= phase.first_seq) info += bits;
    }
    std::size_t fixed = 0;
    for (const auto& [seq, seed, len] : history) {
      if (seq < phase.first_seq && seed == mine->second) fixed = std::max(fixed, len);
    }
    DemandRecord d;
    d.seq = e.seq;
    d.phase = ann.phases.size() - 1;
    d.demanded = f.payload.size() / t.rows;
    d.information = info;
    d.fixed = fixed;
    d.challenge = d.demanded >= fixed + info + 2 * t.unit;
    if (d.challenge) phase.challenge = true;
    ann.demands.push_back(d);
  }
  for (std::size_t i = 0; i + 1 < ann.phases.size(); ++i) {
    const auto& p = ann.phases[i];
    const auto& q = ann.phases[i + 1];
    if (p.bad && q.bad && !p.challenge && !q.challenge) ++ann.violations;
  }
  return ann;
}

Accounting account(const Transcript& t) {
  Accounting acc;
  std::map<std::pair<Role, std::size_t>, std::size_t> longest;
  bool have_last = false;
  Role last = Role::initiator;
  for (const auto& e : t.events) {
    if (e.type != EventType::emit) continue;
    PartyAccounting& p = e.party == Role::initiator ? acc.a : acc.b;
    ++p.frames;
    if (e.frame.kind == FrameKind::seed) p.fresh_bits += e.frame.payload.size();
    if (e.frame.kind == FrameKind::data || e.frame.kind == FrameKind::response) {
      std::size_t& best = longest[{e.party, e.frame.phase}];
      best = std::max(best, e.frame.payload.size());
    }
    if (!have_last || e.party != last) ++acc.rounds;
    have_last = true;
    last = e.party;
  }
  for (const auto& [key, bits] : longest) {
    (key.first == Role::initiator ? acc.a : acc.b).revealed_bits += bits;
  }
  return acc;
}

}  // namespace amplify
