#pragma once

// Subcommand entry points, callable both from the binary and from tests.
// Each returns a process exit code:
//   0  success (solve: converged; certify: all residuals within tol)
//   1  input or structural error
//   2  solve stopped at the iteration cap
//   3  certification failed (some KKT residual above tol)
// Diagnostics go to stderr, progress to stdout; artifacts land in out_dir.

#include <cstdint>
#include <optional>
#include <string>

namespace mdpcg::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitIterationCap = 2;
inline constexpr int kExitCertificationFailure = 3;

// One flag set shared by all subcommands; each ignores what it does not use.
struct CommandOptions {
  std::string config_path;
  std::string out_dir;
  std::string equilibrium_dir;           // certify/simulate input; out_dir when empty
  std::optional<std::uint64_t> seed;     // overrides both solver and rollout seeds
  std::optional<double> tol;             // solve: gap tolerance; certify: residual tolerance
  std::optional<int> max_iters;
  std::optional<int> trials;
  bool paper_literal_congestion_sign = false;
  bool arrival_complement = false;
};

// Solves the configured game, writing manifest_solve.txt, one
// distribution_player_<i>.csv per player, trace.csv and summary.txt.
int cmd_solve(const CommandOptions& options);

// Reloads a solved joint distribution, rebuilds the dual certificate and
// writes certificate.txt. Infeasible input exits 1; residuals above tol
// (default 1e-4) exit 3.
int cmd_certify(const CommandOptions& options);

// Monte Carlo rollout of a solved warehouse equilibrium: writes
// rollout_summary.csv and collisions_per_step.csv.
int cmd_simulate(const CommandOptions& options);

// Renders whatever artifacts exist in out_dir into convergence.svg,
// collisions.svg and wait_times.svg. Missing pieces warn; nothing renderable
// exits 1.
int cmd_report(const CommandOptions& options);

}  // namespace mdpcg::cli
