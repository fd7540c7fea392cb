#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "amplify/codes.hpp"
#include "amplify/error.hpp"
#include "amplify/harness.hpp"

namespace {

using namespace amplify;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::string out;
  std::string format = "table";
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--trials", c.trials, "trials per cell (overrides the config)");
  cmd->add_option("--out", c.out, "output file instead of stdout");
  cmd->add_option("--format", c.format, "table or records")
      ->check(CLI::IsMember({"table", "records"}));
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig config = load_experiment(c.config);
  if (c.seed != 0) config.seed = c.seed;
  if (c.trials != 0) config.trials = c.trials;
  config.validate();
  return config;
}

int simulate(const Common& c, unsigned workers) {
  ExperimentConfig config = load(c);
  if (workers != 0) config.workers = workers;
  const Report r = monte_carlo(config);
  write_output(c.out, report_emit(r, parse_report_format(c.format)));
  for (const auto& row : r.rows) {
    if (row.status != "ok") return 2;
  }
  return 0;
}

int attack(const Common& c, const std::string& strategy, std::size_t cell) {
  ExperimentConfig config = load(c);
  const auto grid = config.grid();
  if (cell >= grid.size()) throw ConfigError("cell index beyond the grid");
  const std::string name = strategy.empty() ? config.strategies.at(0) : strategy;
  const CellRunner runner(config, grid[cell], cell);
  const std::uint64_t trials = c.trials == 0 ? 1 : c.trials;
  std::ostringstream os;
  for (const auto& f : runner.flags()) os << "# flag: " << f << '\n';
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    const TrialOutcome o = runner.run(name, trial);
    os << transcript_to_text(o.session.transcript);
    const Annotation ann = annotate_phases(o.session.transcript);
    os << "# " << name << " @ " << grid[cell].to_string() << ": A "
       << party_status_name(o.status_a) << ", B " << party_status_name(o.status_b)
       << (o.eve_wins ? ", eve wins" : "") << (o.correct ? ", correct" : "")
       << (o.key ? ", key " + o.key->to_string() : "") << '\n';
    std::size_t bad = 0, challenges = 0;
    for (const auto& p : ann.phases) {
      bad += p.bad;
      challenges += p.challenge;
    }
    os << "# phases " << ann.phases.size() << ", bad " << bad << ", challenge " << challenges
       << ", violations " << ann.violations << '\n';
  }
  write_output(c.out, os.str());
  return 0;
}

int ext_test(const Common& c, std::size_t m, bool two_source) {
  ExperimentConfig config = load(c);
  const auto grid = config.grid();
  std::ostringstream os;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellRunner runner(config, grid[i], i);
    os << grid[i].to_string() << ": ";
    try {
      if (config.protocol == ProtocolKind::extract) {
        const ExtractDistance d =
            exact_extract_distance(to_table(runner.x_source()), to_table(runner.y_source()),
                                   to_table(runner.w_source()), runner.extract_config());
        os << "joint " << d.joint << " bound " << d.bound() << " (dx " << d.delta_x << ", dy "
           << d.delta_y << ", key " << d.delta_key << ")\n";
      } else if (two_source) {
        const std::size_t bits = m == 0 ? 1 : m;
        const TwoSourceDistance d = exact_two_source_distance(
            to_table(runner.x_source()), to_table(runner.y_source()), config.raz, bits);
        os << two_source_kind_name(config.raz.kind) << " m=" << bits << " given_y "
           << d.given_y << " given_x " << d.given_x << '\n';
      } else {
        const std::size_t bits = m == 0 ? config.key_bits : m;
        const double d = exact_seeded_distance(to_table(runner.w_source()), config.ext, bits);
        os << seeded_kind_name(config.ext.kind) << " m=" << bits << " distance " << d << '\n';
      }
    } catch (const RefusedError& e) {
      os << "refused: " << e.what() << '\n';
    }
  }
  write_output(c.out, os.str());
  return 0;
}

int code_gen(std::size_t lambda_m, double e, double rho, const std::string& cache,
             const std::string& out) {
  const EditCodebook book =
      cache.empty() ? edit_code_generate(lambda_m, e, rho) : edit_code_cached(cache, lambda_m, e, rho);
  const CodeVerification v = book.verify();
  const bool ok = v.ok(std::size_t{1} << lambda_m);
  std::fprintf(stderr, "%zu codewords, length %zu, weight %zu, min distance %zu (need %zu): %s\n",
               v.codewords, book.lambda_c(), book.weight(), v.min_distance,
               book.required_distance(), ok ? "verified" : "FAILED");
  if (!out.empty()) write_output(out, book.to_text());
  return ok ? 0 : 1;
}

int phase_audit(const std::string& path, const std::string& out) {
  const auto transcripts = parse_transcripts(read_file(path));
  std::ostringstream os;
  std::size_t total = 0;
  for (const auto& t : transcripts) {
    const Annotation ann = annotate_phases(t);
    os << "trial " << t.trial << (ann.truncated ? " (truncated)" : "") << ": "
       << ann.phases.size() << " phases, " << ann.violations << " violations\n";
    for (std::size_t i = 0; i < ann.phases.size(); ++i) {
      const PhaseAnnotation& p = ann.phases[i];
      os << "  phase " << i << " seq " << p.first_seq << "-" << p.last_seq
         << (p.bad ? " bad" : " good") << (p.challenge ? " challenge" : "");
      for (const auto& op : p.ops) os << ' ' << op;
      os << '\n';
    }
    for (const auto& d : ann.demands) {
      os << "  demand seq " << d.seq << " phase " << d.phase << " demanded " << d.demanded
         << " fixed " << d.fixed << " information " << d.information << (d.challenge ? " challenge" : "") << '\n';
    }
    total += ann.violations;
  }
  write_output(out, os.str());
  return total == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy amplification and authentication simulator"};
  app.require_subcommand(1);

  Common sim;
  unsigned workers = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "run every cell of a config");
  add_common(simulate_cmd, sim, true);
  simulate_cmd->add_option("--workers", workers, "worker threads (overrides the config)");

  Common atk;
  std::string strategy;
  std::size_t cell = 0;
  auto* attack_cmd = app.add_subcommand("attack", "one strategy with full transcripts");
  add_common(attack_cmd, atk, true);
  attack_cmd->add_option("--strategy", strategy, "strategy name (default: first in config)");
  attack_cmd->add_option("--cell", cell, "grid index");

  Common ext;
  std::size_t m = 0;
  bool two_source = false;
  auto* ext_cmd = app.add_subcommand("ext-test", "exact extractor distances over the grid");
  add_common(ext_cmd, ext, true);
  ext_cmd->add_option("-m,--output-bits", m, "output length (default from the config)");
  ext_cmd->add_flag("--two-source", two_source, "test the [protocol] raz extractor on X, Y");

  std::size_t lambda_m = 4;
  double code_e = 0.25, code_rho = 0.25;
  std::string cache, code_out;
  auto* code_cmd = app.add_subcommand("code-gen", "build and verify an edit codebook");
  code_cmd->add_option("--lambda-m", lambda_m, "message bits");
  code_cmd->add_option("--e", code_e, "relative edit distance");
  code_cmd->add_option("--rho", code_rho, "rate");
  code_cmd->add_option("--cache", cache, "cache directory");
  code_cmd->add_option("--out", code_out, "write the codebook text");

  std::string transcript_path, audit_out;
  auto* audit_cmd = app.add_subcommand("phase-audit", "annotate a transcript file");
  audit_cmd->add_option("transcripts", transcript_path)->required()->check(CLI::ExistingFile);
  audit_cmd->add_option("--out", audit_out, "output file instead of stdout");

  std::string records_path, report_out, report_format = "table";
  auto* report_cmd = app.add_subcommand("report", "re-render a records file");
  report_cmd->add_option("records", records_path)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_out, "output file instead of stdout");
  report_cmd->add_option("--format", report_format, "table or records")
      ->check(CLI::IsMember({"table", "records"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) return simulate(sim, workers);
    if (*attack_cmd) return attack(atk, strategy, cell);
    if (*ext_cmd) return ext_test(ext, m, two_source);
    if (*code_cmd) return code_gen(lambda_m, code_e, code_rho, cache, code_out);
    if (*audit_cmd) return phase_audit(transcript_path, audit_out);
    if (*report_cmd) {
      const Report r = report_parse_records(read_file(records_path));
      write_output(report_out, report_emit(r, parse_report_format(report_format)));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
