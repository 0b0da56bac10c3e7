#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crn/csv.hpp"

namespace crn::cli {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  const char* env = std::getenv("CRN_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

inline void log(LogLevel at_least, const std::string& msg) {
  if (log_level() >= at_least) std::cerr << "crn: " << msg << "\n";
}

struct RunConfig {
  std::string command;
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> window;
  std::optional<double> alpha;
  std::optional<double> t_weight;
  int threads = 1;
  std::string out_dir = "out";
  int restarts = 5;
};

namespace detail {

inline Scenario prepare(const RunConfig& cfg, bool generate) {
  Scenario s = load_scenario(cfg.scenario_path);
  if (cfg.seed) s.seed = *cfg.seed;
  if (cfg.iters) s.solver.dual_iters = *cfg.iters;
  if (cfg.window) s.solver.averaging_window = *cfg.window;
  if (cfg.alpha)
    for (SuNode& n : s.nodes) n.power_fraction = *cfg.alpha;
  if (cfg.t_weight)
    for (SuLink& l : s.links) l.t_weight = *cfg.t_weight;
  validate_scenario(s);
  if (!generate) return s;
  return generate_channels(s, s.seed);
}

inline void emit_solution(const FeasibleSolution& sol, const FeasibilityReport& rep, const Scenario& s,
                          const std::filesystem::path& dir, const std::string& prefix) {
  write_solution_links_csv(sol, s, (dir / (prefix + "links.csv")).string());
  write_solution_sessions_csv(sol, (dir / (prefix + "sessions.csv")).string());
  write_solution_flows_csv(sol, (dir / (prefix + "flows.csv")).string());
  write_feasibility_csv(rep, (dir / (prefix + "feasibility.csv")).string());
}

}  // namespace detail

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 infeasible/diagnostic failure, 2 usage error.
inline int run_command(int argc, const char* const* argv) {
  CLI::App app{"Cross-layer optimizer for multihop MIMO cognitive-radio networks"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::uint64_t seed_flag = 0;
  int iters_flag = 0, window_flag = 0;
  double alpha_flag = 0.0, t_flag = 0.0;

  auto add_common = [&](CLI::App* sub, bool scenario_required = true) {
    auto* s = sub->add_option("--scenario", cfg.scenario_path, "scenario JSON file");
    if (scenario_required) s->required();
    sub->add_option("--seed", seed_flag, "channel seed override");
    sub->add_option("--iters", iters_flag, "dual iterations N")->check(CLI::PositiveNumber);
    sub->add_option("--window", window_flag, "averaging window n")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", alpha_flag, "power fraction override")->check(CLI::Range(1e-9, 1.0));
    sub->add_option("--t-weight", t_flag, "power weight override")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", cfg.threads, "worker threads per round")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out_dir, "output directory");
  };

  CLI::App* c_run = app.add_subcommand("run", "run the dual decomposition and emit trace CSVs");
  CLI::App* c_recover = app.add_subcommand("recover", "full pipeline: dual loop, averaging, primal recovery");
  CLI::App* c_sweep = app.add_subcommand("sweep", "utility-power sweep over alpha, t and seeds");
  CLI::App* c_baseline = app.add_subcommand("baseline", "centralized and equal-bandwidth baselines");
  CLI::App* c_validate = app.add_subcommand("validate", "schema-check a scenario file");
  for (CLI::App* sub : {c_run, c_recover, c_sweep, c_baseline, c_validate}) add_common(sub);
  c_baseline->add_option("--restarts", cfg.restarts, "centralized multi-start count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << app.help() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  CLI::App* active = app.get_subcommands().front();
  cfg.command = active->get_name();
  if (active->count("--seed")) cfg.seed = seed_flag;
  if (active->count("--iters")) cfg.iters = iters_flag;
  if (active->count("--window")) cfg.window = window_flag;
  if (active->count("--alpha")) cfg.alpha = alpha_flag;
  if (active->count("--t-weight")) cfg.t_weight = t_flag;

  try {
    std::filesystem::path dir(cfg.out_dir);
    if (cfg.command != "validate") std::filesystem::create_directories(dir);

    if (cfg.command == "validate") {
      detail::prepare(cfg, false);
      log(LogLevel::info, "scenario '" + cfg.scenario_path + "' is valid");
      return 0;
    }
    if (cfg.command == "run") {
      Scenario s = detail::prepare(cfg, true);
      log(LogLevel::info, "dual decomposition, N=" + std::to_string(s.solver.dual_iters));
      DualResult dual = run_dual_decomposition(s, s.solver.dual_iters, cfg.threads);
      write_trace_links_csv(dual.trace, (dir / "trace_links.csv").string());
      write_trace_summary_csv(dual.trace, (dir / "trace_summary.csv").string());
      log(LogLevel::info, "wrote trace_links.csv, trace_summary.csv");
      return 0;
    }
    if (cfg.command == "recover") {
      Scenario s = detail::prepare(cfg, true);
      if (s.solver.averaging_window > s.solver.dual_iters)
        throw std::runtime_error("averaging window exceeds the iteration count");
      log(LogLevel::info, "pipeline, N=" + std::to_string(s.solver.dual_iters) + " n=" +
                              std::to_string(s.solver.averaging_window));
      DualResult dual;
      RecoveryResult rec = run_full_pipeline(s, cfg.threads, &dual);
      FeasibilityReport rep = verify_feasibility(rec.solution, s);
      write_trace_links_csv(dual.trace, (dir / "trace_links.csv").string());
      write_trace_summary_csv(dual.trace, (dir / "trace_summary.csv").string());
      detail::emit_solution(rec.solution, rep, s, dir, "solution_");
      log(LogLevel::info, "utility " + format_number(rec.solution.utility) + ", power " +
                              format_number(rec.solution.total_power) + ", max violation " +
                              format_number(rep.max_violation()));
      if (!rep.feasible) {
        std::cerr << "crn: recovered solution failed the feasibility audit\n";
        return 1;
      }
      return 0;
    }
    if (cfg.command == "sweep") {
      Scenario s = detail::prepare(cfg, false);
      std::vector<double> alphas = cfg.alpha ? std::vector<double>{*cfg.alpha}
                                             : std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
      std::vector<double> ts = cfg.t_weight ? std::vector<double>{*cfg.t_weight} : std::vector<double>{0.0, 0.001};
      std::vector<std::uint64_t> seeds = cfg.seed ? std::vector<std::uint64_t>{*cfg.seed}
                                                  : std::vector<std::uint64_t>{1, 2, 3, 4, 5};
      if (cfg.iters) s.solver.dual_iters = *cfg.iters;
      log(LogLevel::info, "sweep over " + std::to_string(alphas.size() * ts.size() * seeds.size()) + " cells");
      SweepTable table = sweep_utility_power(s, alphas, ts, seeds, cfg.threads);
      write_sweep_csv(table, (dir / "sweep.csv").string());
      write_sweep_markdown(table, (dir / "sweep.md").string());
      log(LogLevel::info, "wrote sweep.csv (" + std::to_string(table.rows.size()) + " rows, " +
                              std::to_string(table.failures.size()) + " failures)");
      return table.failures.empty() ? 0 : 1;
    }
    if (cfg.command == "baseline") {
      Scenario s = detail::prepare(cfg, true);
      log(LogLevel::info, "equal-bandwidth baseline");
      FeasibleSolution eq = equal_bandwidth_baseline(s, cfg.threads);
      detail::emit_solution(eq, verify_feasibility(eq, s), s, dir, "equal_");
      log(LogLevel::info, "centralized baseline, restarts=" + std::to_string(cfg.restarts));
      FeasibleSolution central = centralized_solve(s, cfg.restarts, cfg.threads);
      detail::emit_solution(central, verify_feasibility(central, s), s, dir, "centralized_");
      log(LogLevel::info, "equal-bandwidth utility " + format_number(eq.utility) + ", centralized utility " +
                              format_number(central.utility));
      return 0;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "crn: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace crn::cli
