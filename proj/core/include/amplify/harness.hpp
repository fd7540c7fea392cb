#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amplify/adversary.hpp"
#include "amplify/entropy.hpp"
#include "amplify/extractors.hpp"
#include "amplify/protocol.hpp"

namespace amplify {

// ---- Config files -------------------------------------------------------------------

/// Line-oriented `key = value` entries under `[section]` headers. `#` starts
/// a comment. Keys are unique within a section.
class ConfigFile {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  const std::vector<Section>& sections() const noexcept { return sections_; }
  const Section* section(std::string_view name) const;
  std::optional<std::string> get(std::string_view section, std::string_view key) const;

 private:
  std::vector<Section> sections_;
};

/// Comma-separated list with surrounding blanks trimmed.
std::vector<std::string> split_list(std::string_view text);

/// Grid expression in one variable: a number, `v`, `v^E`, `C*v`, `Cv` or
/// `v/C`. Throws ConfigError for anything else.
double eval_scaled(std::string_view expr, char var, double value);

// ---- Experiments ---------------------------------------------------------------------

enum class ProtocolKind : std::uint8_t { sauth, auth, nauth, key_agreement, extract };

std::string_view protocol_name(ProtocolKind p);
ProtocolKind parse_protocol(std::string_view name);

/// One grid point.
struct CellParams {
  std::size_t n = 0;
  double k = 0.0;
  std::size_t t = 0;
  std::size_t ell = 0;
  std::uint64_t base = 2;

  std::string to_string() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProtocolKind protocol = ProtocolKind::auth;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency.
  unsigned workers = 0;
  FeasibilityPolicy feasibility = FeasibilityPolicy::permissive;
  /// Annotate every transcript and count lemma violations.
  bool audit = true;
  /// Frame cap as a multiple of the honest frame count.
  std::size_t cap_factor = 10;
  /// Report fresh bits as 3t per seed instead of the stand-in's seed length.
  bool idealized_seed_accounting = false;

  // Grid; the product of the lists is expanded in n, k, t, ell, base order.
  std::vector<std::size_t> n{64};
  std::vector<std::string> k{"n"};
  std::vector<std::size_t> t{4};
  std::vector<std::string> ell{"t"};
  std::vector<std::uint64_t> base{2};

  SeededExtractor ext;
  /// Schedule unit; 0 means t for the authentication family and 1 for
  /// extraction.
  std::size_t unit = 0;
  /// Fixed message; random per trial when empty.
  std::optional<BitString> message;

  // Edit code for nauth and key agreement.
  std::size_t lambda_m = 4;
  double code_e = 0.25;
  double code_rho = 0.25;

  /// Key length for key agreement and extraction.
  std::size_t key_bits = 8;

  // Matrix protocol.
  unsigned iterations = 0;
  std::uint64_t prime = 251;
  std::size_t sr_row_bits = 4;
  std::size_t x1_bits = 1, x2_bits = 2, x3_bits = 4, r3_bits = 1;
  TwoSourceExtractor raz{TwoSourceKind::gf2n_product, 16, 0};
  TwoSourceExtractor srg{TwoSourceKind::gf2n_product, 8, 0};
  TwoSourceExtractor final_ext{TwoSourceKind::random_oracle_sim, 8, 0};

  // Sources. W uses the grid's (n, k); X and Y reuse them with derived seeds.
  SourceFamily family = SourceFamily::flat;
  std::uint64_t source_seed = 7;
  double bias = -1.0;

  std::vector<std::string> strategies{"passive"};

  /// Checks names and ranges; throws ConfigError.
  void validate() const;
  std::vector<CellParams> grid() const;
};

/// Sections [experiment], [grid], [protocol], [source] and [strategies].
/// Every key must be known and every component name must resolve.
ExperimentConfig parse_experiment(const ConfigFile& file);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Strategy names: passive, drop_all, bitflip:i, insert:b:i, delete:i,
/// swap:i:j, replay:k, guess:SOURCE[:i:j] (a swap answered from SOURCE), or
/// the raw `edit;...` grammar. Friendly names take extra `;key=value`
/// options of the raw grammar, e.g. `swap:0:1;guess=oracle:1`. Friendly
/// names guess uniformly unless told otherwise. Positions index data frames
/// of the attacked stream and must lie below `stream_bits` (at most
/// `stream_bits` for inserts); replay indices lie below `seeds`. Throws
/// ConfigError otherwise.
std::unique_ptr<Strategy> make_strategy(std::string_view name, std::size_t stream_bits,
                                        std::size_t seeds);
/// The `edit;...` form of a friendly name; other names are returned as is.
std::string strategy_grammar(std::string_view name);

/// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                          double z = 1.959963984540054);

struct TrialOutcome {
  SessionResult session;
  PartyStatus status_a = PartyStatus::running;
  PartyStatus status_b = PartyStatus::running;
  PartyLedger ledger_a, ledger_b;
  /// Both accepted with the outputs an honest run gives.
  bool correct = false;
  bool eve_wins = false;
  /// Key of the initiator, when the protocol produces one.
  std::optional<BitString> key;
};

/// Everything fixed for one grid point: configurations, sources, codebook
/// and the honest frame counts. Safe to share across threads.
class CellRunner {
 public:
  /// Throws ConfigError when the point is inconsistent, or infeasible under
  /// the strict policy.
  CellRunner(const ExperimentConfig& config, const CellParams& params, std::size_t cell_index);

  const CellParams& params() const noexcept { return params_; }
  /// Permissive feasibility violations and stand-in flags.
  const std::vector<std::string>& flags() const noexcept { return flags_; }
  std::size_t honest_frames() const noexcept { return honest_frames_; }
  /// Data frames and seeds of the attacked stream in an honest run.
  std::size_t stream_bits(Direction d) const;
  std::size_t seed_frames(Direction d) const;
  std::size_t frame_cap() const noexcept { return config_.cap_factor * honest_frames_; }
  const SourceSpec& w_source() const noexcept { return w_source_; }
  const SourceSpec& x_source() const noexcept { return x_source_; }
  const SourceSpec& y_source() const noexcept { return y_source_; }
  /// Matrix protocol configuration; meaningful for extract only.
  const ExtractConfig& extract_config() const noexcept { return extract_; }

  /// Builds a strategy with positions checked against this point's honest
  /// run. Throws ConfigError.
  std::unique_ptr<Strategy> strategy(std::string_view name) const;
  TrialOutcome run(std::string_view strategy, std::uint64_t trial) const;

 private:
  TrialOutcome run(Strategy& eve, std::uint64_t trial, std::size_t frame_cap) const;
  struct Inputs;
  Inputs draw(std::uint64_t trial) const;
  PartyPair parties(const Inputs& in, std::uint64_t trial) const;
  SessionSpec session(const Inputs& in, std::uint64_t trial) const;

  ExperimentConfig config_;
  CellParams params_;
  std::uint64_t cell_seed_ = 0;
  SourceSpec w_source_, x_source_, y_source_;
  AuthConfig auth_;
  std::shared_ptr<const EditCodebook> book_;
  ExtractConfig extract_;
  std::vector<std::string> flags_;
  std::size_t honest_frames_ = 0;
  std::map<Direction, std::size_t> stream_bits_, seed_frames_;
};

// ---- Reports ---------------------------------------------------------------------------

struct ReportRow {
  std::string experiment;
  std::string protocol;
  std::string strategy;
  std::string params;
  /// "ok" or "skipped".
  std::string status = "ok";
  std::string reason;

  std::uint64_t trials = 0;
  std::uint64_t correct = 0;
  std::uint64_t eve_wins = 0;
  std::uint64_t aborts = 0;
  std::uint64_t capped = 0;
  std::uint64_t lemma_violations = 0;
  /// Accepted sessions with a bad phase and no challenge.
  std::uint64_t uncertified = 0;
  /// Sessions whose transcript counts disagree with the party ledgers.
  std::uint64_t ledger_mismatches = 0;

  /// Per-session maxima from the party ledgers.
  std::uint64_t fresh_bits_a = 0;
  std::uint64_t fresh_bits_b = 0;
  std::uint64_t w_loss_bits = 0;
  std::uint64_t rounds = 0;

  double correctness_rate = 0.0;
  double eve_win_rate = 0.0;
  double eve_win_low = 0.0;
  double eve_win_high = 0.0;
  /// Distance of the initiator's key from uniform, from the trial histogram.
  std::optional<double> key_distance;
  std::vector<std::string> flags;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Report {
  std::vector<ReportRow> rows;
  friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat : std::uint8_t { table, records };
ReportFormat parse_report_format(std::string_view name);

/// Byte-stable rendering. Records are one JSON object per line.
std::string report_emit(const Report& report, ReportFormat format);
/// Inverse of the records format. Throws FormatError.
Report report_parse_records(std::string_view text);

/// Runs every (grid point, strategy) cell. Trial seeds are derived from the
/// master seed, the grid index and the trial number, so the report does not
/// depend on the worker count.
Report monte_carlo(const ExperimentConfig& config);

// ---- Exact oracles -------------------------------------------------------------------

inline constexpr std::uint64_t kMaxJointPoints = std::uint64_t{1} << 28;

/// SD((Ext(W, S), S), (U_m, S)) for a uniform seed S of the extractor's
/// length. Refuses more than 2^28 (w, seed) pairs.
double exact_seeded_distance(const DistributionTable& w, const SeededExtractor& ext,
                             std::size_t m);

struct TwoSourceDistance {
  /// SD((Ext(X, Y), Y), (U, Y)) and SD((Ext(X, Y), X), (U, X)).
  double given_y = 0.0;
  double given_x = 0.0;
  double strong() const noexcept { return given_x > given_y ? given_x : given_y; }
};

TwoSourceDistance exact_two_source_distance(const DistributionTable& x,
                                            const DistributionTable& y,
                                            const TwoSourceExtractor& ext, std::size_t m);

struct ExtractDistance {
  /// SD((s_x, s_y, T), (U, U, T)) with T = (w, x1, y1, x2, r3), which
  /// determines everything an honest run puts on the wire.
  double joint = 0.0;
  /// E_w SD(SR_x | w, SR_x), and the same for Y.
  double delta_x = 0.0;
  double delta_y = 0.0;
  /// The joint distance when SR_x and SR_y are drawn from their marginals
  /// independently of w.
  double delta_key = 0.0;
  /// Hybrid bound 2 (delta_x + delta_y) + delta_key on `joint`.
  double bound() const noexcept { return 2.0 * (delta_x + delta_y) + delta_key; }
};

/// Honest runs of the matrix protocol, enumerated through the fast path.
/// Refuses more than 2^28 (w, x, y) points.
ExtractDistance exact_extract_distance(const DistributionTable& x, const DistributionTable& y,
                                       const DistributionTable& w, const ExtractConfig& config);

}  // namespace amplify
