#include "amplify/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "amplify/error.hpp"
#include "json.hpp"

namespace amplify {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(what) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, std::string_view what) {
  text = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": cannot parse '" + std::string(text) + "'");
  }
}

bool parse_flag(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(std::string(what) + ": expected a boolean, got '" + std::string(text) + "'");
}

template <typename T>
std::vector<T> parse_number_list(std::string_view text, std::string_view what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(item, what));
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

// ---- Config files ---------------------------------------------------------------------

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile file;
  std::size_t line_no = 0;
  for (std::string_view line : split_on(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where + ": malformed section header");
      }
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (file.section(name)) throw ConfigError(where + ": duplicate section [" + name + "]");
      file.sections_.push_back({name, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    if (file.sections_.empty()) throw ConfigError(where + ": entry outside a section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto& entries = file.sections_.back().entries;
    for (const auto& [k, _] : entries) {
      if (k == key) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    entries.emplace_back(key, value);
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigFile::Section* ConfigFile::section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::string> ConfigFile::get(std::string_view section_name,
                                           std::string_view key) const {
  const Section* s = section(section_name);
  if (!s) return std::nullopt;
  for (const auto& [k, v] : s->entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  for (std::string_view item : split_on(text, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
    out.emplace_back(item);
  }
  return out;
}

double eval_scaled(std::string_view expr, char var, double value) {
  const std::string_view e = trim(expr);
  const std::string what = "expression '" + std::string(e) + "'";
  const auto pos = e.find(var);
  if (pos == std::string_view::npos) return parse_real(e, what);
  if (e.size() == 1) return value;
  if (pos == 0 && e.size() > 2 && e[1] == '^') return std::pow(value, parse_real(e.substr(2), what));
  if (pos == 0 && e.size() > 2 && e[1] == '/') return value / parse_real(e.substr(2), what);
  if (pos == e.size() - 1) {
    std::string_view coeff = e.substr(0, pos);
    if (!coeff.empty() && coeff.back() == '*') coeff.remove_suffix(1);
    return parse_real(coeff, what) * value;
  }
  throw ConfigError("unsupported " + what);
}

// ---- Experiments ------------------------------------------------------------------------

std::string_view protocol_name(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::sauth: return "sauth";
    case ProtocolKind::auth: return "auth";
    case ProtocolKind::nauth: return "nauth";
    case ProtocolKind::key_agreement: return "key_agreement";
    case ProtocolKind::extract: return "extract";
  }
  return "?";
}

ProtocolKind parse_protocol(std::string_view name) {
  for (ProtocolKind p : {ProtocolKind::sauth, ProtocolKind::auth, ProtocolKind::nauth,
                         ProtocolKind::key_agreement, ProtocolKind::extract}) {
    if (protocol_name(p) == name) return p;
  }
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

std::string CellParams::to_string() const {
  return "n=" + std::to_string(n) + " k=" + format_real(k) + " t=" + std::to_string(t) +
         " ell=" + std::to_string(ell) + " base=" + std::to_string(base);
}

void ExperimentConfig::validate() const {
  if (trials == 0) throw ConfigError("trials must be positive");
  if (cap_factor == 0) throw ConfigError("cap_factor must be positive");
  if (n.empty() || k.empty() || t.empty() || ell.empty() || base.empty()) {
    throw ConfigError("every grid list needs at least one value");
  }
  for (const auto& e : k) eval_scaled(e, 'n', 1.0);
  for (const auto& e : ell) eval_scaled(e, 't', 1.0);
  if (strategies.empty()) throw ConfigError("no strategies listed");
  for (const auto& s : strategies) parse_strategy(strategy_grammar(s));
  if (!(code_e > 0 && code_e <= 1) || !(code_rho > 0 && code_rho <= 1)) {
    throw ConfigError("code_e and code_rho must lie in (0, 1]");
  }
  if (key_bits == 0) throw ConfigError("key_bits must be positive");
}

std::vector<CellParams> ExperimentConfig::grid() const {
  validate();
  std::vector<CellParams> out;
  for (std::size_t nv : n) {
    for (const auto& ke : k) {
      for (std::size_t tv : t) {
        for (const auto& le : ell) {
          for (std::uint64_t b : base) {
            const double ellv = std::round(eval_scaled(le, 't', static_cast<double>(tv)));
            if (ellv < 1) throw ConfigError("ell must be positive");
            out.push_back({nv, eval_scaled(ke, 'n', static_cast<double>(nv)), tv,
                           static_cast<std::size_t>(ellv), b});
          }
        }
      }
    }
  }
  return out;
}

ExperimentConfig parse_experiment(const ConfigFile& file) {
  ExperimentConfig c;
  for (const auto& section : file.sections()) {
    const std::string& s = section.name;
    if (s != "experiment" && s != "grid" && s != "protocol" && s != "source" &&
        s != "strategies") {
      throw ConfigError("unknown section [" + s + "]");
    }
    for (const auto& [key, value] : section.entries) {
      const std::string what = "[" + s + "] " + key;
      auto unknown = [&] { throw ConfigError("unknown key " + what); };
      if (s == "experiment") {
        if (key == "name") c.name = value;
        else if (key == "protocol") c.protocol = parse_protocol(value);
        else if (key == "trials") c.trials = parse_number<std::uint64_t>(value, what);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, what);
        else if (key == "workers") c.workers = parse_number<unsigned>(value, what);
        else if (key == "feasibility") {
          if (value == "strict") c.feasibility = FeasibilityPolicy::strict;
          else if (value == "permissive") c.feasibility = FeasibilityPolicy::permissive;
          else throw ConfigError(what + ": expected strict or permissive");
        } else if (key == "audit") c.audit = parse_flag(value, what);
        else if (key == "cap_factor") c.cap_factor = parse_number<std::size_t>(value, what);
        else if (key == "idealized_seed_accounting") c.idealized_seed_accounting = parse_flag(value, what);
        else unknown();
      } else if (s == "grid") {
        if (key == "n") c.n = parse_number_list<std::size_t>(value, what);
        else if (key == "k") c.k = split_list(value);
        else if (key == "t") c.t = parse_number_list<std::size_t>(value, what);
        else if (key == "ell") c.ell = split_list(value);
        else if (key == "base") c.base = parse_number_list<std::uint64_t>(value, what);
        else unknown();
      } else if (s == "protocol") {
        if (key == "extractor") c.ext.kind = parse_seeded_kind(value);
        else if (key == "oracle_seed_bits") c.ext.oracle_seed_bits = parse_number<std::size_t>(value, what);
        else if (key == "ext_seed") c.ext.session_seed = parse_number<std::uint64_t>(value, what);
        else if (key == "unit") c.unit = parse_number<std::size_t>(value, what);
        else if (key == "message") {
          if (value == "random") c.message.reset();
          else {
            try {
              c.message = BitString::from_string(value);
            } catch (const std::exception&) {
              throw ConfigError(what + ": expected 'random' or a bit string");
            }
          }
        } else if (key == "lambda_m") c.lambda_m = parse_number<std::size_t>(value, what);
        else if (key == "code_e") c.code_e = parse_real(value, what);
        else if (key == "code_rho") c.code_rho = parse_real(value, what);
        else if (key == "key_bits") c.key_bits = parse_number<std::size_t>(value, what);
        else if (key == "iterations") c.iterations = parse_number<unsigned>(value, what);
        else if (key == "prime") c.prime = parse_number<std::uint64_t>(value, what);
        else if (key == "sr_row_bits") c.sr_row_bits = parse_number<std::size_t>(value, what);
        else if (key == "x1_bits") c.x1_bits = parse_number<std::size_t>(value, what);
        else if (key == "x2_bits") c.x2_bits = parse_number<std::size_t>(value, what);
        else if (key == "x3_bits") c.x3_bits = parse_number<std::size_t>(value, what);
        else if (key == "r3_bits") c.r3_bits = parse_number<std::size_t>(value, what);
        else if (key == "raz") c.raz.kind = parse_two_source_kind(value);
        else if (key == "raz_window") c.raz.window = parse_number<std::size_t>(value, what);
        else if (key == "srg") c.srg.kind = parse_two_source_kind(value);
        else if (key == "srg_window") c.srg.window = parse_number<std::size_t>(value, what);
        else if (key == "final") c.final_ext.kind = parse_two_source_kind(value);
        else if (key == "final_window") c.final_ext.window = parse_number<std::size_t>(value, what);
        else unknown();
      } else if (s == "source") {
        if (key == "family") c.family = parse_family(value);
        else if (key == "seed") c.source_seed = parse_number<std::uint64_t>(value, what);
        else if (key == "bias") c.bias = parse_real(value, what);
        else unknown();
      } else if (s == "strategies") {
        if (key == "list") c.strategies = split_list(value);
        else unknown();
      } else {
        throw ConfigError("unknown section [" + s + "]");
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return parse_experiment(ConfigFile::load(path));
}

// ---- Strategies ------------------------------------------------------------------------

std::string strategy_grammar(std::string_view name) {
  name = trim(name);
  const auto semi = name.find(';');
  const std::string_view head = name.substr(0, semi);
  const std::string rest = semi == std::string_view::npos ? "" : std::string(name.substr(semi));
  if (head == "passive" || head == "drop_all" || head == "edit") return std::string(name);

  const auto parts = split_on(head, ':');
  const std::string_view kind = parts[0];
  auto arg = [&](std::size_t i) -> std::string {
    if (i >= parts.size() || parts[i].empty()) {
      throw ConfigError("strategy '" + std::string(head) + "' is missing a parameter");
    }
    parse_number<std::size_t>(parts[i], "strategy parameter");
    return std::string(parts[i]);
  };
  auto arity = [&](std::size_t n) {
    if (parts.size() != n + 1) {
      throw ConfigError("strategy '" + std::string(head) + "' takes " + std::to_string(n) +
                        " parameters");
    }
  };
  std::string ops, guess = ";guess=uniform";
  if (kind == "bitflip") {
    arity(1);
    ops = "flip@" + arg(1);
  } else if (kind == "insert") {
    arity(2);
    const std::string b = arg(1);
    if (b != "0" && b != "1") throw ConfigError("insert bit must be 0 or 1");
    ops = "ins" + b + "@" + arg(2);
  } else if (kind == "delete") {
    arity(1);
    ops = "del@" + arg(1);
  } else if (kind == "swap") {
    arity(2);
    ops = "swap@" + arg(1) + ":" + arg(2);
  } else if (kind == "replay") {
    arity(1);
    ops = "replay@" + arg(1);
  } else if (kind == "guess") {
    if (parts.size() < 2) throw ConfigError("guess needs a source");
    std::string source(parts[1]);
    std::size_t next = 2;
    if (source == "oracle") {
      if (parts.size() < 3) throw ConfigError("guess:oracle needs a probability");
      source += ":" + std::string(parts[2]);
      next = 3;
    }
    guess = ";guess=" + source;
    if (parts.size() == next) {
      ops = "swap@0:1";
    } else if (parts.size() == next + 2) {
      ops = "swap@" + arg(next) + ":" + arg(next + 1);
    } else {
      throw ConfigError("guess takes a source and optionally two positions");
    }
  } else {
    throw ConfigError("unknown strategy '" + std::string(head) + "'");
  }
  return "edit;ops=" + ops + guess + rest;
}

std::unique_ptr<Strategy> make_strategy(std::string_view name, std::size_t stream_bits,
                                        std::size_t seeds) {
  const std::string grammar = strategy_grammar(name);
  if (grammar.rfind("edit", 0) == 0) {
    const EveConfig c = parse_eve_config(std::string_view(grammar).substr(4));
    for (const EditOp& op : c.ops) {
      const bool insert = op.kind == EditOp::Kind::insert0 || op.kind == EditOp::Kind::insert1;
      if (op.kind == EditOp::Kind::replay) {
        if (op.index == 0 || op.index >= seeds) {
          throw ConfigError("replay index " + std::to_string(op.index) + " outside 1.." +
                            std::to_string(seeds == 0 ? 0 : seeds - 1));
        }
      } else if (insert ? op.index > stream_bits : op.index >= stream_bits) {
        throw ConfigError("position " + std::to_string(op.index) + " outside the " +
                          std::to_string(stream_bits) + " data frames of the attacked stream");
      }
    }
  }
  return parse_strategy(grammar);
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                          double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

// ---- Cell runner ---------------------------------------------------------------------------

struct CellRunner::Inputs {
  BitString w, x, y, message;
  PartySeeds seeds;
  std::uint64_t eve_seed = 0;
};

namespace {

Direction parse_stream(const std::string& grammar) {
  if (grammar.rfind("edit", 0) != 0) return Direction::a_to_b;
  return parse_eve_config(std::string_view(grammar).substr(4)).stream;
}

bool is_key_protocol(ProtocolKind p) {
  return p == ProtocolKind::key_agreement || p == ProtocolKind::extract;
}

}  // namespace

CellRunner::CellRunner(const ExperimentConfig& config, const CellParams& params,
                       std::size_t cell_index)
    : config_(config), params_(params) {
  cell_seed_ = derive_seed(config.seed, "cell", cell_index);
  w_source_ = SourceSpec{params.n, params.k, config.family, config.source_seed, config.bias, {}, {}};
  w_source_.validate();
  x_source_ = w_source_;
  x_source_.seed = derive_seed(config.source_seed, "x-source", 0);
  y_source_ = w_source_;
  y_source_.seed = derive_seed(config.source_seed, "y-source", 0);

  if (config.protocol == ProtocolKind::extract) {
    ExtractConfig& e = extract_;
    e.condenser = CondenserSpec{params.n, config.iterations, config.prime};
    e.raz = config.raz;
    e.raz.session_seed = derive_seed(config.seed, "raz", 0);
    e.sr_row_bits = config.sr_row_bits;
    e.x1_bits = config.x1_bits;
    e.x2_bits = config.x2_bits;
    e.x3_bits = config.x3_bits;
    e.ext = config.ext;
    e.srg = config.srg;
    e.srg.session_seed = derive_seed(config.seed, "srg", 0);
    e.r3_bits = config.r3_bits;
    e.final_ext = config.final_ext;
    e.final_ext.session_seed = derive_seed(config.seed, "final", 0);
    e.key_bits = config.key_bits;
    e.condenser.validate();
    e.schedule = schedule_build(params.base, config.unit == 0 ? 1 : config.unit,
                                e.t() + e.t_prime(), SIZE_MAX);
    e.validate();
    flags_ = extract_warnings(e);
  } else {
    if (config.unit != 0 && config.unit != params.t) {
      throw ConfigError("the authentication family uses unit = t");
    }
    auth_ = make_auth_config(params.n, params.t, params.base, config.ext);
    flags_ = check_auth_feasibility(params.k, params.ell, auth_, config.feasibility);
    if (config.ext.simulation_only()) flags_.push_back("challenge strings: " + config.ext.name());
    if (config.protocol == ProtocolKind::nauth || config.protocol == ProtocolKind::key_agreement) {
      book_ = std::make_shared<const EditCodebook>(
          edit_code_generate(config.lambda_m, config.code_e, config.code_rho));
    }
    if (config.protocol == ProtocolKind::nauth && params.ell % config.lambda_m) {
      throw ConfigError("nauth needs ell to be a multiple of lambda_m");
    }
  }
  if (config.message) {
    const std::size_t want = config.protocol == ProtocolKind::sauth ? params.t : params.ell;
    if (is_key_protocol(config.protocol)) {
      throw ConfigError("key protocols take no message");
    }
    if (config.message->size() != want) {
      throw ConfigError("message must have " + std::to_string(want) + " bits");
    }
  }

  // Honest reference run for the frame cap and strategy position ranges.
  PassiveEve passive;
  const TrialOutcome ref = run(passive, 0, 10'000'000);
  if (!ref.correct) {
    throw ConfigError("the honest reference run failed: " +
                      std::string(party_status_name(ref.status_a)) + "/" +
                      std::string(party_status_name(ref.status_b)));
  }
  honest_frames_ = ref.session.deliveries;
  for (const auto& e : ref.session.transcript.events) {
    if (e.type != EventType::emit) continue;
    if (e.frame.kind == FrameKind::data) ++stream_bits_[e.frame.dir];
    if (e.frame.kind == FrameKind::seed) ++seed_frames_[e.frame.dir];
  }
}

std::size_t CellRunner::stream_bits(Direction d) const {
  const auto it = stream_bits_.find(d);
  return it == stream_bits_.end() ? 0 : it->second;
}

std::size_t CellRunner::seed_frames(Direction d) const {
  const auto it = seed_frames_.find(d);
  return it == seed_frames_.end() ? 0 : it->second;
}

CellRunner::Inputs CellRunner::draw(std::uint64_t trial) const {
  Inputs in;
  Rng rw(derive_seed(cell_seed_, "w", trial));
  in.w = sample(w_source_, rw);
  if (config_.protocol == ProtocolKind::extract) {
    Rng rx(derive_seed(cell_seed_, "x", trial)), ry(derive_seed(cell_seed_, "y", trial));
    in.x = sample(x_source_, rx);
    in.y = sample(y_source_, ry);
  } else if (config_.protocol != ProtocolKind::key_agreement) {
    if (config_.message) {
      in.message = *config_.message;
    } else {
      Rng rm(derive_seed(cell_seed_, "message", trial));
      in.message = random_bits(
          rm, config_.protocol == ProtocolKind::sauth ? params_.t : params_.ell);
    }
  }
  in.seeds.initiator = derive_seed(cell_seed_, "initiator", trial);
  in.seeds.responder = derive_seed(cell_seed_, "responder", trial);
  in.eve_seed = derive_seed(cell_seed_, "eve", trial);
  return in;
}

PartyPair CellRunner::parties(const Inputs& in, std::uint64_t) const {
  switch (config_.protocol) {
    case ProtocolKind::sauth: return make_sauth(in.w, in.message, auth_, in.seeds);
    case ProtocolKind::auth: return make_auth(in.w, in.message, auth_, in.seeds);
    case ProtocolKind::nauth: return make_nauth(in.w, in.message, book_, auth_, in.seeds);
    case ProtocolKind::key_agreement: {
      KeyAgreementConfig k{auth_, book_, config_.ext, config_.key_bits};
      return make_key_agreement(in.w, k, in.seeds);
    }
    case ProtocolKind::extract: return make_extract(in.x, in.y, in.w, extract_);
  }
  throw ConfigError("unknown protocol");
}

SessionSpec CellRunner::session(const Inputs& in, std::uint64_t trial) const {
  SessionSpec s;
  s.trial = trial;
  s.eve_seed = in.eve_seed;
  const BitString w = in.w;
  if (config_.protocol == ProtocolKind::extract) {
    const ExtractConfig c = extract_;
    s.schedule = c.schedule;
    s.rows = c.rows();
    s.seed_bits = c.rows() * c.x1_bits;
    s.truth = [w, c](const BitString& seed, std::size_t len) {
      BitString out;
      const std::size_t full = c.schedule.max_length();
      const BitMatrix rows = BitMatrix::from_flat(seed, c.rows());
      for (const auto& row : rows.row_list()) {
        out.append(prefix(c.ext.extract(w, row, full), len));
      }
      return out;
    };
  } else {
    const AuthConfig c = auth_;
    s.schedule = c.schedule;
    s.rows = 1;
    s.seed_bits = c.seed_bits;
    s.truth = [w, c](const BitString& seed, std::size_t len) {
      return prefix(c.ext.extract(w, seed, c.schedule.max_length()), len);
    };
  }
  return s;
}

std::unique_ptr<Strategy> CellRunner::strategy(std::string_view name) const {
  const Direction d = parse_stream(strategy_grammar(name));
  return make_strategy(name, stream_bits(d), seed_frames(d));
}

TrialOutcome CellRunner::run(std::string_view strategy_name, std::uint64_t trial) const {
  auto eve = strategy(strategy_name);
  return run(*eve, trial, frame_cap());
}

TrialOutcome CellRunner::run(Strategy& eve, std::uint64_t trial, std::size_t frame_cap) const {
  const Inputs in = draw(trial);
  PartyPair p = parties(in, trial);
  SessionSpec spec = session(in, trial);
  spec.frame_cap = frame_cap;
  TrialOutcome out;
  out.session = run_session(*p.initiator, *p.responder, eve, spec);
  const Party& a = *p.initiator;
  const Party& b = *p.responder;
  out.status_a = a.status();
  out.status_b = b.status();
  out.ledger_a = a.ledger();
  out.ledger_b = b.ledger();
  const bool both = out.status_a == PartyStatus::accepted && out.status_b == PartyStatus::accepted;
  switch (config_.protocol) {
    case ProtocolKind::sauth:
    case ProtocolKind::auth:
    case ProtocolKind::nauth: {
      const bool b_ok = out.status_b == PartyStatus::accepted;
      out.eve_wins = b_ok && b.received_message() != in.message;
      out.correct = both && b.received_message() == in.message;
      break;
    }
    case ProtocolKind::key_agreement:
      out.eve_wins = both && a.output() != b.output();
      out.correct = both && a.output() == b.output();
      if (out.status_a == PartyStatus::accepted) out.key = a.output();
      break;
    case ProtocolKind::extract: {
      const bool consistent =
          a.sent_message() == b.received_message() && b.sent_message() == a.received_message();
      out.eve_wins = both && !consistent;
      if (both && consistent) {
        const ExtractOutcome honest = extract_honest_outcome(in.x, in.y, in.w, extract_);
        out.correct = a.output() == honest.s_x && b.output() == honest.s_y;
      }
      if (out.status_a == PartyStatus::accepted) out.key = a.output();
      break;
    }
  }
  return out;
}

// ---- Reports ------------------------------------------------------------------------------

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::table;
  if (name == "records") return ReportFormat::records;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

namespace {

using Json = nlohmann::ordered_json;

const char* const kCountFields[] = {"trials",       "correct",          "eve_wins",
                                    "aborts",       "capped",           "lemma_violations",
                                    "uncertified",  "ledger_mismatches", "fresh_bits_a",
                                    "fresh_bits_b", "w_loss_bits",      "rounds"};

std::uint64_t* count_field(ReportRow& r, std::string_view name) {
  std::uint64_t* fields[] = {&r.trials,         &r.correct,      &r.eve_wins,
                             &r.aborts,         &r.capped,       &r.lemma_violations,
                             &r.uncertified,    &r.ledger_mismatches, &r.fresh_bits_a,
                             &r.fresh_bits_b,   &r.w_loss_bits,  &r.rounds};
  for (std::size_t i = 0; i < std::size(kCountFields); ++i) {
    if (name == kCountFields[i]) return fields[i];
  }
  return nullptr;
}

const char* const kRateFields[] = {"correctness_rate", "eve_win_rate", "eve_win_low",
                                   "eve_win_high"};

double* rate_field(ReportRow& r, std::string_view name) {
  double* fields[] = {&r.correctness_rate, &r.eve_win_rate, &r.eve_win_low, &r.eve_win_high};
  for (std::size_t i = 0; i < std::size(kRateFields); ++i) {
    if (name == kRateFields[i]) return fields[i];
  }
  return nullptr;
}

Json row_to_json(const ReportRow& row) {
  ReportRow& r = const_cast<ReportRow&>(row);
  Json j;
  j["experiment"] = r.experiment;
  j["protocol"] = r.protocol;
  j["strategy"] = r.strategy;
  j["params"] = r.params;
  j["status"] = r.status;
  j["reason"] = r.reason;
  for (const char* f : kCountFields) j[f] = *count_field(r, f);
  for (const char* f : kRateFields) j[f] = *rate_field(r, f);
  j["key_distance"] = r.key_distance ? Json(*r.key_distance) : Json(nullptr);
  j["flags"] = r.flags;
  return j;
}

ReportRow row_from_json(const Json& j) {
  ReportRow r;
  try {
    r.experiment = j.at("experiment").get<std::string>();
    r.protocol = j.at("protocol").get<std::string>();
    r.strategy = j.at("strategy").get<std::string>();
    r.params = j.at("params").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.reason = j.at("reason").get<std::string>();
    for (const char* f : kCountFields) *count_field(r, f) = j.at(f).get<std::uint64_t>();
    for (const char* f : kRateFields) *rate_field(r, f) = j.at(f).get<double>();
    const Json& kd = j.at("key_distance");
    if (!kd.is_null()) r.key_distance = kd.get<double>();
    r.flags = j.at("flags").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("report record: ") + e.what());
  }
  if (j.size() != 6 + std::size(kCountFields) + std::size(kRateFields) + 2) {
    throw FormatError("report record has unexpected fields");
  }
  return r;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string render_table(const Report& report) {
  std::vector<std::string> header{"experiment", "protocol", "strategy", "params", "status"};
  for (const char* f : kCountFields) header.emplace_back(f);
  for (const char* f : kRateFields) header.emplace_back(f);
  header.emplace_back("key_distance");
  header.emplace_back("flags");
  header.emplace_back("reason");

  std::vector<std::vector<std::string>> cells{header};
  for (const ReportRow& row : report.rows) {
    ReportRow& r = const_cast<ReportRow&>(row);
    std::vector<std::string> line{r.experiment, r.protocol, r.strategy, r.params, r.status};
    for (const char* f : kCountFields) line.push_back(std::to_string(*count_field(r, f)));
    for (const char* f : kRateFields) line.push_back(format_real(*rate_field(r, f)));
    line.push_back(r.key_distance ? format_real(*r.key_distance) : "-");
    line.push_back(r.flags.empty() ? "-" : join(r.flags, "; "));
    line.push_back(r.reason.empty() ? "-" : r.reason);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) text += "  ";
      text += line[i];
      if (i + 1 < line.size()) text.append(width[i] - line[i].size(), ' ');
    }
    out += text + "\n";
  }
  return out;
}

}  // namespace

std::string report_emit(const Report& report, ReportFormat format) {
  if (format == ReportFormat::table) return render_table(report);
  std::string out;
  for (const ReportRow& r : report.rows) out += row_to_json(r).dump() + "\n";
  return out;
}

Report report_parse_records(std::string_view text) {
  Report report;
  std::size_t line_no = 0;
  for (std::string_view line : split_on(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw FormatError("record line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("record line " + std::to_string(line_no) + ": not an object");
    report.rows.push_back(row_from_json(j));
  }
  return report;
}

// ---- Monte Carlo -----------------------------------------------------------------------------

namespace {

/// Per-worker counts; merging is associative and commutative.
struct Tally {
  std::uint64_t trials = 0, correct = 0, eve_wins = 0, aborts = 0, capped = 0;
  std::uint64_t lemma_violations = 0, uncertified = 0, ledger_mismatches = 0;
  std::uint64_t fresh_a = 0, fresh_b = 0, w_loss = 0, rounds = 0;
  std::uint64_t seeds_a = 0, seeds_b = 0;
  std::map<std::uint64_t, std::uint64_t> keys;
  std::uint64_t key_count = 0;
  /// Lowest failing trial and its error.
  std::optional<std::pair<std::uint64_t, std::string>> error;

  void merge(const Tally& o) {
    trials += o.trials;
    correct += o.correct;
    eve_wins += o.eve_wins;
    aborts += o.aborts;
    capped += o.capped;
    lemma_violations += o.lemma_violations;
    uncertified += o.uncertified;
    ledger_mismatches += o.ledger_mismatches;
    fresh_a = std::max(fresh_a, o.fresh_a);
    fresh_b = std::max(fresh_b, o.fresh_b);
    w_loss = std::max(w_loss, o.w_loss);
    rounds = std::max(rounds, o.rounds);
    seeds_a = std::max(seeds_a, o.seeds_a);
    seeds_b = std::max(seeds_b, o.seeds_b);
    for (const auto& [k, v] : o.keys) keys[k] += v;
    key_count += o.key_count;
    if (o.error && (!error || o.error->first < error->first)) error = o.error;
  }
};

inline constexpr std::size_t kMaxHistogramKeyBits = 20;

void record(Tally& t, const TrialOutcome& o, bool audit, std::size_t key_bits) {
  ++t.trials;
  t.correct += o.correct;
  t.eve_wins += o.eve_wins;
  t.aborts += o.status_a == PartyStatus::aborted || o.status_b == PartyStatus::aborted;
  t.capped += o.session.capped;
  const Accounting acc = account(o.session.transcript);
  const bool ledgers_agree = acc.a.fresh_bits == o.ledger_a.fresh_bits &&
                             acc.b.fresh_bits == o.ledger_b.fresh_bits &&
                             acc.a.revealed_bits == o.ledger_a.revealed_bits &&
                             acc.b.revealed_bits == o.ledger_b.revealed_bits &&
                             acc.a.frames == o.ledger_a.frames_sent &&
                             acc.b.frames == o.ledger_b.frames_sent;
  t.ledger_mismatches += !ledgers_agree;
  t.fresh_a = std::max<std::uint64_t>(t.fresh_a, o.ledger_a.fresh_bits);
  t.fresh_b = std::max<std::uint64_t>(t.fresh_b, o.ledger_b.fresh_bits);
  t.w_loss = std::max<std::uint64_t>(t.w_loss,
                                     o.ledger_a.revealed_bits + o.ledger_b.revealed_bits);
  t.rounds = std::max<std::uint64_t>(t.rounds, acc.rounds);
  std::uint64_t seeds_a = 0, seeds_b = 0;
  for (const auto& e : o.session.transcript.events) {
    if (e.type != EventType::emit || e.frame.kind != FrameKind::seed) continue;
    ++(e.party == Role::initiator ? seeds_a : seeds_b);
  }
  t.seeds_a = std::max(t.seeds_a, seeds_a);
  t.seeds_b = std::max(t.seeds_b, seeds_b);
  if (audit) {
    const Annotation ann = annotate_phases(o.session.transcript);
    t.lemma_violations += ann.violations;
    const bool accepted =
        o.status_a == PartyStatus::accepted && o.status_b == PartyStatus::accepted;
    const bool bad = std::any_of(ann.phases.begin(), ann.phases.end(),
                                 [](const PhaseAnnotation& p) { return p.bad; });
    const bool challenged = std::any_of(ann.phases.begin(), ann.phases.end(),
                                        [](const PhaseAnnotation& p) { return p.challenge; });
    t.uncertified += accepted && bad && !challenged;
  }
  if (o.key && key_bits <= kMaxHistogramKeyBits) {
    ++t.keys[o.key->to_uint()];
    ++t.key_count;
  }
}

double histogram_distance(const Tally& t, std::size_t key_bits) {
  const double u = std::ldexp(1.0, -static_cast<int>(key_bits));
  const double n = static_cast<double>(t.key_count);
  double sd = 0.0;
  for (const auto& [_, c] : t.keys) sd += std::abs(static_cast<double>(c) / n - u);
  const double unseen = std::ldexp(1.0, static_cast<int>(key_bits)) - static_cast<double>(t.keys.size());
  sd += unseen * u;
  return 0.5 * sd;
}

Tally run_cell(const CellRunner& runner, const std::string& strategy, std::uint64_t trials,
               unsigned workers, bool audit, std::size_t key_bits) {
  std::vector<Tally> parts(workers);
  auto work = [&](unsigned w) {
    for (std::uint64_t i = w; i < trials; i += workers) {
      try {
        record(parts[w], runner.run(strategy, i), audit, key_bits);
      } catch (const std::exception& e) {
        if (!parts[w].error || parts[w].error->first > i) parts[w].error = {i, e.what()};
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  Tally total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace

Report monte_carlo(const ExperimentConfig& config) {
  const std::vector<CellParams> grid = config.grid();
  unsigned workers = config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.trials));

  Report report;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    std::unique_ptr<CellRunner> runner;
    std::string failure;
    try {
      runner = std::make_unique<CellRunner>(config, grid[gi], gi);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    for (const std::string& strategy : config.strategies) {
      ReportRow row;
      row.experiment = config.name;
      row.protocol = std::string(protocol_name(config.protocol));
      row.strategy = strategy;
      row.params = grid[gi].to_string();
      if (!runner) {
        row.status = "skipped";
        row.reason = failure;
        report.rows.push_back(std::move(row));
        continue;
      }
      try {
        runner->strategy(strategy);
      } catch (const std::exception& e) {
        row.status = "skipped";
        row.reason = e.what();
        report.rows.push_back(std::move(row));
        continue;
      }
      row.flags = runner->flags();
      const Tally t =
          run_cell(*runner, strategy, config.trials, workers, config.audit, config.key_bits);
      if (t.error) {
        row.status = "skipped";
        row.reason = "trial " + std::to_string(t.error->first) + " failed: " + t.error->second;
      }
      row.trials = t.trials;
      row.correct = t.correct;
      row.eve_wins = t.eve_wins;
      row.aborts = t.aborts;
      row.capped = t.capped;
      row.lemma_violations = t.lemma_violations;
      row.uncertified = t.uncertified;
      row.ledger_mismatches = t.ledger_mismatches;
      row.fresh_bits_a = t.fresh_a;
      row.fresh_bits_b = t.fresh_b;
      if (config.idealized_seed_accounting) {
        const std::uint64_t d = 3 * grid[gi].t;
        row.fresh_bits_a = t.seeds_a * d;
        row.fresh_bits_b = t.seeds_b * d;
        row.flags.push_back("idealized seed accounting: " + std::to_string(d) + " bits per seed");
      }
      row.w_loss_bits = t.w_loss;
      row.rounds = t.rounds;
      if (t.trials) {
        row.correctness_rate = static_cast<double>(t.correct) / static_cast<double>(t.trials);
        row.eve_win_rate = static_cast<double>(t.eve_wins) / static_cast<double>(t.trials);
      }
      std::tie(row.eve_win_low, row.eve_win_high) = wilson_interval(t.eve_wins, t.trials);
      if (is_key_protocol(config.protocol) && t.key_count > 0) {
        row.key_distance = histogram_distance(t, config.key_bits);
        row.flags.push_back("sampled key distance");
      }
      if (!config.audit) row.flags.push_back("transcripts not audited");
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---- Exact oracles ---------------------------------------------------------------------------

namespace {

void refuse_above(double points, std::string_view what) {
  if (points > static_cast<double>(kMaxJointPoints)) {
    throw RefusedError(std::string(what) + ": " + format_real(points) +
                       " joint points exceed the 2^28 enumeration bound");
  }
}

std::vector<BitString> support_strings(const DistributionTable& t) {
  std::vector<BitString> out;
  out.reserve(t.support_size());
  for (const auto& [v, _] : t.entries()) out.push_back(BitString::from_uint(v, t.n()));
  return out;
}

double distance_from_uniform(const std::vector<double>& p, double total) {
  const double u = total / static_cast<double>(p.size());
  double sd = 0.0;
  for (double v : p) sd += std::abs(v - u);
  return 0.5 * sd;
}

}  // namespace

double exact_seeded_distance(const DistributionTable& w, const SeededExtractor& ext,
                             std::size_t m) {
  if (m == 0 || m > kMaxTableBits) throw RangeError("output length must lie in 1..24");
  const std::size_t d = ext.seed_length(w.n(), m);
  if (d > 40) throw RefusedError("seeded distance: seeds of " + std::to_string(d) + " bits");
  refuse_above(std::ldexp(static_cast<double>(w.support_size()), static_cast<int>(d)),
               "seeded distance");
  const auto ws = support_strings(w);
  const std::uint64_t seeds = std::uint64_t{1} << d;
  std::vector<double> p(std::size_t{1} << m);
  double total = 0.0;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    std::fill(p.begin(), p.end(), 0.0);
    const BitString seed = BitString::from_uint(s, d);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      p[ext.extract(ws[i], seed, m).to_uint()] += w.entries()[i].second;
    }
    total += distance_from_uniform(p, 1.0);
  }
  return total / static_cast<double>(seeds);
}

TwoSourceDistance exact_two_source_distance(const DistributionTable& x,
                                            const DistributionTable& y,
                                            const TwoSourceExtractor& ext, std::size_t m) {
  if (m == 0 || m > kMaxTableBits) throw RangeError("output length must lie in 1..24");
  refuse_above(static_cast<double>(x.support_size()) * static_cast<double>(y.support_size()),
               "two-source distance");
  const auto xs = support_strings(x), ys = support_strings(y);
  std::vector<std::uint32_t> out(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      out[i * ys.size() + j] = static_cast<std::uint32_t>(ext(xs[i], ys[j], m).to_uint());
    }
  }
  TwoSourceDistance r;
  std::vector<double> p(std::size_t{1} << m);
  for (std::size_t j = 0; j < ys.size(); ++j) {
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) p[out[i * ys.size() + j]] += x.entries()[i].second;
    r.given_y += y.entries()[j].second * distance_from_uniform(p, 1.0);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t j = 0; j < ys.size(); ++j) p[out[i * ys.size() + j]] += y.entries()[j].second;
    r.given_x += x.entries()[i].second * distance_from_uniform(p, 1.0);
  }
  return r;
}

namespace {

/// Everything the honest fast path needs from one somewhere-random matrix.
struct SrInfo {
  std::uint32_t x1 = 0, x2 = 0;          // dense ids of the slices
  std::vector<std::uint32_t> key;        // key value per r3 value
};

class SrPool {
 public:
  SrPool(const ExtractConfig& c) : c_(c) {}

  std::uint32_t id(const BitMatrix& sr) {
    const BitString flat = sr.flatten();
    const auto [it, fresh] = ids_.try_emplace(flat, static_cast<std::uint32_t>(info_.size()));
    if (fresh) {
      SrInfo info;
      info.x1 = intern(x1_ids_, slice(sr, c_.x1_bits).flatten());
      const BitMatrix x2 = slice(sr, c_.x2_bits);
      info.x2 = intern(x2_ids_, x2.flatten());
      if (info.x2 == x2_list_.size()) x2_list_.push_back(x2);
      const BitMatrix s3 = slice(sr, c_.x3_bits);
      for (std::uint64_t r = 0; r < (std::uint64_t{1} << c_.r3_bits); ++r) {
        info.key.push_back(static_cast<std::uint32_t>(
            extract_key(s3, BitString::from_uint(r, c_.r3_bits), c_).to_uint()));
      }
      info_.push_back(std::move(info));
    }
    return it->second;
  }

  const SrInfo& info(std::uint32_t id) const { return info_[id]; }
  std::size_t x1_count() const { return x1_ids_.size(); }
  std::size_t x2_count() const { return x2_list_.size(); }
  /// r3 for every (y2, x2) pair of ids.
  std::vector<std::uint32_t> r3_table() const {
    std::vector<std::uint32_t> t(x2_list_.size() * x2_list_.size());
    for (std::size_t a = 0; a < x2_list_.size(); ++a) {
      for (std::size_t b = 0; b < x2_list_.size(); ++b) {
        t[a * x2_list_.size() + b] =
            static_cast<std::uint32_t>(extract_r3(x2_list_[a], x2_list_[b], c_).to_uint());
      }
    }
    return t;
  }

 private:
  static std::uint32_t intern(std::map<BitString, std::uint32_t>& m, const BitString& v) {
    return m.try_emplace(v, static_cast<std::uint32_t>(m.size())).first->second;
  }

  const ExtractConfig& c_;
  std::map<BitString, std::uint32_t> ids_, x1_ids_, x2_ids_;
  std::vector<SrInfo> info_;
  std::vector<BitMatrix> x2_list_;
};

BitMatrix somewhere_random(const BitMatrix& condensed, const BitString& w,
                           const ExtractConfig& c) {
  std::vector<BitString> rows;
  rows.reserve(condensed.rows());
  for (const auto& row : condensed.row_list()) rows.push_back(c.raz(row, w, c.sr_row_bits));
  return BitMatrix(std::move(rows));
}

/// Accumulates P(T, s_x, s_y) for T = (x1, y1, x2, r3) within one w.
class KeyJoint {
 public:
  KeyJoint(const SrPool& pool, std::size_t r3_bits, std::size_t key_bits)
      : pool_(pool),
        nx1_(pool.x1_count()),
        nx2_(pool.x2_count()),
        nr3_(std::size_t{1} << r3_bits),
        nk_(std::size_t{1} << key_bits),
        r3_(pool.r3_table()) {
    const double cells = static_cast<double>(nx1_) * nx1_ * nx2_ * nr3_ * nk_ * nk_;
    if (cells > static_cast<double>(std::uint64_t{1} << 26)) {
      throw RefusedError("transcript space too large for the dense joint table");
    }
    acc_.assign(static_cast<std::size_t>(cells), 0.0);
  }

  void add(std::uint32_t srx, std::uint32_t sry, double mass) {
    const SrInfo& a = pool_.info(srx);
    const SrInfo& b = pool_.info(sry);
    const std::uint32_t r3 = r3_[b.x2 * nx2_ + a.x2];
    const std::size_t t = ((a.x1 * nx1_ + b.x1) * nx2_ + a.x2) * nr3_ + r3;
    acc_[(t * nk_ + a.key[r3]) * nk_ + b.key[r3]] += mass;
  }

  /// Sum over T of sum over keys |P(T, s) - P(T) / K^2| / 2, then resets.
  double take_distance() {
    const std::size_t block = nk_ * nk_;
    double sd = 0.0;
    for (std::size_t t = 0; t < acc_.size(); t += block) {
      double pt = 0.0;
      for (std::size_t s = 0; s < block; ++s) pt += acc_[t + s];
      if (pt == 0.0) continue;
      const double u = pt / static_cast<double>(block);
      for (std::size_t s = 0; s < block; ++s) sd += std::abs(acc_[t + s] - u);
    }
    std::fill(acc_.begin(), acc_.end(), 0.0);
    return 0.5 * sd;
  }

 private:
  const SrPool& pool_;
  std::size_t nx1_, nx2_, nr3_, nk_;
  std::vector<std::uint32_t> r3_;
  std::vector<double> acc_;
};

double marginal_dependence(const std::vector<std::vector<std::uint32_t>>& ids,
                           const DistributionTable& src, const DistributionTable& w,
                           std::size_t pool_size, std::vector<double>& marginal) {
  marginal.assign(pool_size, 0.0);
  std::vector<std::vector<double>> given(w.support_size(), std::vector<double>(pool_size, 0.0));
  for (std::size_t i = 0; i < w.support_size(); ++i) {
    for (std::size_t j = 0; j < src.support_size(); ++j) {
      given[i][ids[i][j]] += src.entries()[j].second;
    }
    for (std::size_t s = 0; s < pool_size; ++s) marginal[s] += w.entries()[i].second * given[i][s];
  }
  double delta = 0.0;
  for (std::size_t i = 0; i < w.support_size(); ++i) {
    double sd = 0.0;
    for (std::size_t s = 0; s < pool_size; ++s) sd += std::abs(given[i][s] - marginal[s]);
    delta += w.entries()[i].second * 0.5 * sd;
  }
  return delta;
}

}  // namespace

ExtractDistance exact_extract_distance(const DistributionTable& x, const DistributionTable& y,
                                       const DistributionTable& w, const ExtractConfig& c) {
  c.condenser.validate();
  if (!(c.x1_bits > 0 && c.x1_bits < c.x2_bits && c.x2_bits <= c.x3_bits &&
        c.x3_bits <= c.sr_row_bits)) {
    throw ConfigError("slice widths must satisfy 0 < x1 < x2 <= x3 <= sr_row_bits");
  }
  if (c.r3_bits == 0 || c.r3_bits > 8 || c.key_bits == 0 || c.key_bits > 8) {
    throw ConfigError("r3 and key lengths must lie in 1..8 for enumeration");
  }
  if (x.n() != c.condenser.n || y.n() != c.condenser.n) {
    throw RangeError("local sources must have the condenser's length");
  }
  refuse_above(static_cast<double>(w.support_size()) * static_cast<double>(x.support_size()) *
                   static_cast<double>(y.support_size()),
               "extract distance");

  SrPool pool(c);
  auto condensed = [&](const DistributionTable& t) {
    std::vector<BitMatrix> out;
    for (const auto& s : support_strings(t)) out.push_back(somewhere_condense(s, c.condenser));
    return out;
  };
  const auto cx = condensed(x), cy = condensed(y);
  const auto ws = support_strings(w);
  std::vector<std::vector<std::uint32_t>> idx(ws.size()), idy(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    for (const auto& m : cx) idx[i].push_back(pool.id(somewhere_random(m, ws[i], c)));
    for (const auto& m : cy) idy[i].push_back(pool.id(somewhere_random(m, ws[i], c)));
  }

  ExtractDistance r;
  KeyJoint joint(pool, c.r3_bits, c.key_bits);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    for (std::size_t a = 0; a < cx.size(); ++a) {
      const double pa = x.entries()[a].second;
      for (std::size_t b = 0; b < cy.size(); ++b) joint.add(idx[i][a], idy[i][b], pa * y.entries()[b].second);
    }
    r.joint += w.entries()[i].second * joint.take_distance();
  }

  std::vector<double> mx, my;
  std::size_t pool_size = 0;
  for (const auto& v : idx) for (auto id : v) pool_size = std::max<std::size_t>(pool_size, id + 1);
  for (const auto& v : idy) for (auto id : v) pool_size = std::max<std::size_t>(pool_size, id + 1);
  r.delta_x = marginal_dependence(idx, x, w, pool_size, mx);
  r.delta_y = marginal_dependence(idy, y, w, pool_size, my);

  for (std::size_t a = 0; a < pool_size; ++a) {
    if (mx[a] == 0.0) continue;
    for (std::size_t b = 0; b < pool_size; ++b) {
      if (my[b] != 0.0) joint.add(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), mx[a] * my[b]);
    }
  }
  r.delta_key = joint.take_distance();
  return r;
}

}  // namespace amplify
