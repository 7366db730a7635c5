// schur_alloc: command-line front end for the hierarchical allocator.
//
//   schur_alloc allocate --cov cov.csv --gamma 0.5
//   schur_alloc shrink   --cov cov.csv --curve curve.csv
//   schur_alloc seriate  --cov cov.csv
//   schur_alloc simulate --profile desk --seed 7 --out rows.csv --svg curve.svg
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hmv/hmv.hpp"

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("SCHUR_ALLOC_LOG");
  if (env == nullptr) return LogLevel::error;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  return LogLevel::error;
}

void log(LogLevel level, const std::string& message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::cerr << "schur_alloc [" << names[static_cast<int>(level)] << "] " << message << '\n';
}

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

/// Writes `text` to `path`, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hmv::Error(hmv::ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

hmv::CovarianceMatrix load_covariance(const std::string& cov_path, const std::string& returns_path) {
  if (!cov_path.empty()) {
    log(LogLevel::info, "reading covariance from " + cov_path);
    return hmv::io::read_covariance_csv(cov_path);
  }
  log(LogLevel::info, "estimating covariance from returns in " + returns_path);
  return hmv::empirical_covariance(hmv::io::read_returns_csv(returns_path));
}

struct AllocationFlags {
  double gamma = 1.0;
  std::optional<double> gamma_b;
  std::string mode = "schur_debiased";
  std::string fitness = "minvar_variance";
  std::string terminal = "minvar";
  long m = 5;
  std::string seriation = "single_linkage";
  bool no_adaptive_cap = false;
  double grid_step = hmv::kDefaultShrinkGridStep;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--gamma", gamma, "Blend toward minimum variance, in [0, 1]")->capture_default_str();
    cmd.add_option("--gamma-b", gamma_b, "Separate blend for the b-vector (defaults to --gamma)");
    cmd.add_option("--mode", mode, "hrp | schur_literal | schur_debiased")->capture_default_str();
    cmd.add_option("--fitness", fitness,
                   "subportfolio_variance | minvar_variance | weak_minvar_variance | diag_sum_squares")
        ->capture_default_str();
    cmd.add_option("--terminal", terminal, "minvar | weak_minvar | equal_weight | inverse_variance")
        ->capture_default_str();
    cmd.add_option("--m", m, "Terminal block size")->capture_default_str();
    cmd.add_option("--seriation", seriation, "single_linkage | identity")->capture_default_str();
    cmd.add_flag("--no-adaptive-cap", no_adaptive_cap, "Use gamma as given at every split");
    cmd.add_option("--grid-step", grid_step, "Weak-shrinkage xi grid step")->capture_default_str();
  }

  /// Only flags the user actually passed override `base`.
  hmv::AllocationConfig apply(const CLI::App& cmd, hmv::AllocationConfig base) const {
    if (cmd.count("--gamma")) base.gammas = hmv::GammaPair::uniform(gamma);
    if (gamma_b) base.gammas.gamma_b = *gamma_b;
    if (cmd.count("--mode")) base.mode = hmv::parse_allocation_mode(mode);
    if (cmd.count("--fitness")) base.fitness = hmv::parse_fitness_kind(fitness);
    if (cmd.count("--terminal")) base.terminal = hmv::parse_terminal_method(terminal);
    if (cmd.count("--m")) base.terminal_size = m;
    if (cmd.count("--seriation")) base.seriation = hmv::parse_seriation_method(seriation);
    if (no_adaptive_cap) base.adaptive_cap = false;
    if (cmd.count("--grid-step")) base.shrink_grid_step = grid_step;
    base.validate();
    return base;
  }

  hmv::AllocationConfig standalone(const CLI::App& cmd) const { return apply(cmd, hmv::AllocationConfig{}); }
};

int run_allocate(const CLI::App& cmd, const std::string& cov_path, const std::string& returns_path,
                 const AllocationFlags& flags, const std::string& format, const std::string& out) {
  const hmv::AllocationConfig config = flags.standalone(cmd);
  const hmv::CovarianceMatrix cov = load_covariance(cov_path, returns_path);
  log(LogLevel::info, "allocating " + std::to_string(cov.size()) + " assets, mode " +
                          std::string(hmv::to_string(config.mode)));
  const hmv::AllocationReport report = hmv::allocate(cov, config);
  for (const auto& s : report.splits) {
    log(LogLevel::debug, "split depth " + std::to_string(s.depth) + " size " + std::to_string(s.size) +
                             " gamma " + std::to_string(s.gamma_c) + " nu " + std::to_string(s.nu_a) + "/" +
                             std::to_string(s.nu_d));
  }
  if (format == "csv") {
    std::ostringstream csv;
    csv << "label,weight\n";
    const auto labels = hmv::io::default_labels(report.weights.labels, report.weights.size());
    for (hmv::Index i = 0; i < report.weights.size(); ++i) {
      csv << labels[static_cast<std::size_t>(i)] << ',' << hmv::io::format_double(report.weights(i)) << '\n';
    }
    emit(out, csv.str());
  } else {
    emit(out, hmv::io::to_json(report, config).dump(2) + "\n");
  }
  return 0;
}

int run_shrink(const std::string& cov_path, double grid_step, const std::string& out, const std::string& shrunk_path,
               const std::string& curve_path) {
  const hmv::CovarianceMatrix cov = hmv::io::read_covariance_csv(cov_path);
  const hmv::ShrinkageResult result = hmv::weak_shrink(cov, grid_step);
  log(LogLevel::info, "weak shrinkage xi = " + std::to_string(result.xi));

  hmv::io::json shrunk = hmv::io::json::array();
  for (hmv::Index i = 0; i < result.shrunk.size(); ++i) {
    shrunk.push_back(hmv::io::to_std(result.shrunk.values().row(i).transpose()));
  }
  const hmv::io::json doc{{"xi", result.xi},
                          {"labels", hmv::io::default_labels(cov.labels(), cov.size())},
                          {"weights", hmv::io::to_std(result.weights.values)},
                          {"clipped_variance", result.clipped_variance},
                          {"skipped", result.skipped},
                          {"shrunk", shrunk}};
  if (!shrunk_path.empty()) {
    std::ostringstream csv;
    hmv::io::write_matrix_csv(csv, result.shrunk.values(), result.shrunk.labels());
    emit(shrunk_path, csv.str());
  }
  if (!curve_path.empty()) {
    std::ostringstream csv;
    csv << "xi,clipped_variance\n";
    for (const auto& p : result.curve) {
      csv << hmv::io::format_double(p.xi) << ',' << hmv::io::format_double(p.clipped_variance) << '\n';
    }
    emit(curve_path, csv.str());
  }
  emit(out, doc.dump(2) + "\n");
  return 0;
}

int run_seriate(const std::string& cov_path, const std::string& method, const std::string& out) {
  const hmv::CovarianceMatrix cov = hmv::io::read_covariance_csv(cov_path);
  const hmv::Permutation p = hmv::seriate(cov, hmv::parse_seriation_method(method));
  emit(out, hmv::io::json(p.order()).dump() + "\n");
  return 0;
}

struct SimulateFlags {
  std::string profile = "desk";
  std::string config_path;
  long p = 0;
  double rho = 0.0;
  long a = 0;
  long o = 0;
  int trials = 0;
  std::vector<double> gammas;
  unsigned threads = 0;
  std::string out;
  std::string summary;
  std::string svg;
};

int run_simulate(const CLI::App& cmd, const SimulateFlags& flags, const AllocationFlags& alloc,
                 std::optional<std::uint64_t> seed) {
  hmv::ExperimentConfig config;
  if (flags.profile == "full") {
    config = hmv::ExperimentConfig::full();
  } else if (flags.profile == "desk") {
    config = hmv::ExperimentConfig::desk();
  } else {
    throw hmv::Error(hmv::ErrorCode::InvalidConfig, "unknown profile '" + flags.profile + "'");
  }
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw hmv::Error(hmv::ErrorCode::IoError, "cannot open '" + flags.config_path + "'");
    hmv::io::json j;
    try {
      in >> j;
    } catch (const hmv::io::json::exception& e) {
      throw hmv::Error(hmv::ErrorCode::InvalidConfig, flags.config_path + ": " + e.what());
    }
    config = hmv::io::experiment_from_json(j, config);
  }
  if (cmd.count("--p")) config.assets = flags.p;
  if (cmd.count("--rho")) config.rho = flags.rho;
  if (cmd.count("--a")) config.anchor_samples = flags.a;
  if (cmd.count("--o")) config.observation_samples = flags.o;
  if (cmd.count("--trials")) config.trials = flags.trials;
  if (cmd.count("--gammas")) config.gamma_grid = flags.gammas;
  if (cmd.count("--threads")) config.threads = flags.threads;
  if (seed) config.seed = *seed;
  config.allocation = alloc.apply(cmd, config.allocation);
  config.validate();

  log(LogLevel::info, "simulating " + std::to_string(config.trials) + " trials at p=" +
                          std::to_string(config.assets));
  const hmv::ExperimentResult result = hmv::run_experiment(config);
  for (const auto& f : result.failures) {
    log(LogLevel::error, "trial " + std::to_string(f.trial) + " gamma " + std::to_string(f.gamma) + ": " + f.message);
  }
  const auto summary = hmv::summarize(result);

  std::ostringstream rows;
  hmv::io::write_experiment_csv(rows, result);
  std::ostringstream table;
  hmv::io::write_summary_csv(table, summary);
  // Rows go to --out (or stdout); the summary goes to --summary, or to
  // stdout when the rows went to a file.
  emit(flags.out, rows.str());
  if (!flags.summary.empty()) {
    emit(flags.summary, table.str());
  } else if (!flags.out.empty()) {
    std::cout << table.str();
  }
  if (!flags.svg.empty()) emit(flags.svg, hmv::render_gamma_curve_svg(summary));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical minimum-variance portfolio allocation"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string format = "json";
  std::string out;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed (all subcommands are deterministic given it)");
    cmd->add_option("--out", out, "Output path (stdout when omitted)");
  };

  // allocate
  auto* allocate_cmd = app.add_subcommand("allocate", "Compute hierarchical portfolio weights");
  std::string cov_path, returns_path;
  auto* cov_opt = allocate_cmd->add_option("--cov", cov_path, "Covariance matrix CSV");
  auto* ret_opt = allocate_cmd->add_option("--returns", returns_path, "Returns panel CSV (T rows x n assets)");
  cov_opt->excludes(ret_opt);
  AllocationFlags allocate_flags;
  allocate_flags.add_to(*allocate_cmd);
  allocate_cmd->add_option("--format", format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  add_common(allocate_cmd);

  // shrink
  auto* shrink_cmd = app.add_subcommand("shrink", "Weak adaptive off-diagonal shrinkage");
  std::string shrink_cov, shrunk_path, curve_path;
  double grid_step = hmv::kDefaultShrinkGridStep;
  shrink_cmd->add_option("--cov", shrink_cov, "Covariance matrix CSV")->required();
  shrink_cmd->add_option("--grid-step", grid_step, "xi grid step")->capture_default_str();
  shrink_cmd->add_option("--shrunk", shrunk_path, "Write the shrunk matrix as CSV");
  shrink_cmd->add_option("--curve", curve_path, "Write the (xi, clipped_variance) curve as CSV");
  shrink_cmd->add_option("--format", format, "json")->check(CLI::IsMember({"json"}));
  add_common(shrink_cmd);

  // seriate
  auto* seriate_cmd = app.add_subcommand("seriate", "Print the seriation order as a JSON list");
  std::string seriate_cov, seriate_method = "single_linkage";
  seriate_cmd->add_option("--cov", seriate_cov, "Covariance matrix CSV")->required();
  seriate_cmd->add_option("--seriation", seriate_method, "single_linkage | identity")->capture_default_str();
  seriate_cmd->add_option("--format", format, "json")->check(CLI::IsMember({"json"}));
  add_common(seriate_cmd);

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Out-of-sample variance versus gamma experiment");
  SimulateFlags sim;
  AllocationFlags sim_alloc;
  simulate_cmd->add_option("--profile", sim.profile, "desk | full")->capture_default_str();
  simulate_cmd->add_option("--config", sim.config_path, "Experiment JSON config");
  simulate_cmd->add_option("--p", sim.p, "Asset count");
  simulate_cmd->add_option("--rho", sim.rho, "Anchor correlation");
  simulate_cmd->add_option("--a", sim.a, "Samples defining the true covariance");
  simulate_cmd->add_option("--o", sim.o, "Samples defining the working estimate");
  simulate_cmd->add_option("--trials", sim.trials, "Number of trials");
  simulate_cmd->add_option("--gammas", sim.gammas, "Gamma grid, e.g. 0,0.5,1")->delimiter(',');
  simulate_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  simulate_cmd->add_option("--summary", sim.summary, "Write the per-gamma summary CSV");
  simulate_cmd->add_option("--svg", sim.svg, "Write the gamma curve as SVG");
  simulate_cmd->add_option("--format", format, "csv")->check(CLI::IsMember({"csv"}));
  sim_alloc.add_to(*simulate_cmd);
  add_common(simulate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (allocate_cmd->parsed()) {
      if (cov_path.empty() && returns_path.empty()) {
        throw hmv::Error(hmv::ErrorCode::InvalidConfig, "one of --cov or --returns is required");
      }
      return run_allocate(*allocate_cmd, cov_path, returns_path, allocate_flags, format, out);
    }
    if (shrink_cmd->parsed()) return run_shrink(shrink_cov, grid_step, out, shrunk_path, curve_path);
    if (seriate_cmd->parsed()) return run_seriate(seriate_cov, seriate_method, out);
    if (simulate_cmd->parsed()) {
      sim.out = out;
      return run_simulate(*simulate_cmd, sim, sim_alloc, seed);
    }
  } catch (const hmv::Error& e) {
    log(LogLevel::error, e.what());
    return hmv::is_validation_error(e.code()) ? kExitInvalid : kExitNumerical;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kExitNumerical;
  }
  return kExitInvalid;
}
