// mdpcg: equilibrium solver for finite-horizon MDP congestion games.
//
//   mdpcg solve    --config cfg.json --out run/
//   mdpcg certify  --config cfg.json --out run/ [--equilibrium run/] [--tol 1e-4]
//   mdpcg simulate --config cfg.json --out run/ [--equilibrium run/] [--trials N]
//   mdpcg report   --out run/

#include <cstdint>
#include <string>

#include "CLI11.hpp"

#include "mdpcg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Frank-Wolfe equilibrium solver for MDP congestion games"};
  app.require_subcommand(1);

  mdpcg::cli::CommandOptions options;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_iters = 0;
  int trials = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    CLI::Option* config = cmd->add_option("--config", options.config_path,
                                          "run configuration (JSON)");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", options.out_dir, "output directory")->required();
    cmd->add_option("--seed", seed, "override both solver and rollout seeds")
        ->default_val(std::uint64_t{0});
    cmd->add_option("--tol", tol, "solve: FW gap tolerance; certify: residual tolerance");
    cmd->add_option("--max-iters", max_iters, "override solver iteration cap");
    cmd->add_option("--trials", trials, "override rollout trial count");
    cmd->add_flag("--paper-literal-congestion-sign", options.paper_literal_congestion_sign,
                  "use the negative congestion sign (waives cost admissibility)");
    cmd->add_flag("--arrival-complement", options.arrival_complement,
                  "arrival probability 1 - exp(-lambda dt) instead of exp(-lambda dt)");
  };

  CLI::App* solve = app.add_subcommand("solve", "compute an equilibrium");
  add_common(solve, true);

  CLI::App* certify = app.add_subcommand("certify", "verify a solved equilibrium");
  add_common(certify, true);
  certify->add_option("--equilibrium", options.equilibrium_dir,
                      "directory holding distribution_player_<i>.csv (default: --out)");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo rollout of an equilibrium");
  add_common(simulate, true);
  simulate->add_option("--equilibrium", options.equilibrium_dir,
                       "directory holding distribution_player_<i>.csv (default: --out)");

  CLI::App* report = app.add_subcommand("report", "render SVG plots from run artifacts");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  // CLI11 leaves unset options at their defaults; forward only what was given.
  CLI::App* cmd = app.get_subcommands().front();
  if (cmd->count("--seed")) options.seed = seed;
  if (cmd->count("--tol")) options.tol = tol;
  if (cmd->count("--max-iters")) options.max_iters = max_iters;
  if (cmd->count("--trials")) options.trials = trials;

  if (cmd == solve) return mdpcg::cli::cmd_solve(options);
  if (cmd == certify) return mdpcg::cli::cmd_certify(options);
  if (cmd == simulate) return mdpcg::cli::cmd_simulate(options);
  return mdpcg::cli::cmd_report(options);
}
