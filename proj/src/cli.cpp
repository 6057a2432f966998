#include "mdpcg/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "mdpcg/config.hpp"
#include "mdpcg/csv.hpp"
#include "mdpcg/game.hpp"
#include "mdpcg/rollout.hpp"
#include "mdpcg/solver.hpp"
#include "mdpcg/svg.hpp"
#include "mdpcg/warehouse.hpp"

namespace mdpcg::cli {
namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Writes the stage manifest with status "started" up front and rewrites it
// with the final status; a stage abandoned by an exception reads "failed".
class StageManifest {
 public:
  StageManifest(const std::string& dir, std::string stage, std::string config_hash,
                std::uint64_t seed)
      : path_(join(dir, "manifest_" + stage + ".txt")) {
    manifest_.stage = std::move(stage);
    manifest_.config_hash = std::move(config_hash);
    manifest_.seed = seed;
    manifest_.created_utc = io::utc_timestamp();
    io::write_manifest(path_, manifest_);
  }

  StageManifest(const StageManifest&) = delete;
  StageManifest& operator=(const StageManifest&) = delete;

  void finish(bool ok) {
    manifest_.status = ok ? "ok" : "failed";
    io::write_manifest(path_, manifest_);
    finished_ = true;
  }

  ~StageManifest() {
    if (!finished_) {
      try {
        manifest_.status = "failed";
        io::write_manifest(path_, manifest_);
      } catch (...) {
      }
    }
  }

 private:
  std::string path_;
  io::RunManifest manifest_;
  bool finished_ = false;
};

int guarded(const char* stage, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::cerr << stage << ": error: " << e.what() << "\n";
    return kExitInputError;
  }
}

io::RunConfig load_config(const CommandOptions& options) {
  if (options.config_path.empty()) throw std::runtime_error("--config is required");
  io::RunConfig cfg = io::load_run_config(options.config_path);
  if (options.seed) {
    cfg.solver.seed = *options.seed;
    cfg.rollout.seed = *options.seed;
  }
  if (options.max_iters) {
    if (*options.max_iters < 1) throw std::runtime_error("--max-iters must be >= 1");
    cfg.solver.max_iterations = *options.max_iters;
  }
  if (options.trials) {
    if (*options.trials < 0) throw std::runtime_error("--trials must be >= 0");
    cfg.rollout.trials = *options.trials;
  }
  if (options.paper_literal_congestion_sign) cfg.scenario.paper_literal_congestion_sign = true;
  if (options.arrival_complement) cfg.scenario.arrival_complement = true;
  return cfg;
}

const char* stop_name(StopReason reason) {
  switch (reason) {
    case StopReason::Tolerances: return "tolerances_met";
    case StopReason::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

std::string player_file(int player_1based) {
  return "distribution_player_" + std::to_string(player_1based) + ".csv";
}

// Reloads every player's distribution and checks shapes against the instance.
JointDistribution load_equilibrium(const std::string& dir, const GameInstance& instance) {
  JointDistribution x;
  x.x.reserve(instance.num_players);
  for (int i = 0; i < instance.num_players; ++i) {
    const std::string path = join(dir, player_file(i + 1));
    StateActionDistribution xi = io::read_distribution_csv(path);
    if (xi.horizon() != instance.horizon.T || xi.num_states() != instance.S ||
        xi.num_actions() != instance.A)
      throw std::runtime_error(path + ": dimensions (T=" + std::to_string(xi.horizon()) +
                               ", S=" + std::to_string(xi.num_states()) +
                               ", A=" + std::to_string(xi.num_actions()) +
                               ") do not match the configured scenario (T=" +
                               std::to_string(instance.horizon.T) +
                               ", S=" + std::to_string(instance.S) +
                               ", A=" + std::to_string(instance.A) + ")");
    x.x.push_back(std::move(xi));
  }
  return x;
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

}  // namespace

int cmd_solve(const CommandOptions& options) {
  return guarded("solve", [&]() -> int {
    io::RunConfig cfg = load_config(options);
    if (options.tol) {
      if (*options.tol < 0.0) throw std::runtime_error("--tol must be >= 0");
      cfg.solver.gap_tolerance = *options.tol;
    }
    if (options.out_dir.empty()) throw std::runtime_error("--out is required");

    const GameInstance instance = io::build_instance(cfg);
    instance.validate();

    fs::create_directories(options.out_dir);
    StageManifest manifest(options.out_dir, "solve", hex64(io::hash_file(options.config_path)),
                           cfg.solver.seed);

    const auto [x, trace] = frank_wolfe(instance, cfg.solver);
    const double final_potential = potential(x, instance.cost_model);
    const NashGap gap = nash_gap(x, instance.cost_model, instance.kernels);
    const double curvature = estimate_curvature(instance, 8, cfg.solver.seed);

    for (int i = 0; i < instance.num_players; ++i)
      io::write_distribution_csv(join(options.out_dir, player_file(i + 1)), x.x[i]);
    io::write_trace_csv(join(options.out_dir, "trace.csv"), trace, instance.num_players);

    {
      std::ofstream out = open_text(join(options.out_dir, "summary.txt"));
      out << "stage=solve\n"
          << "num_players=" << instance.num_players << "\n"
          << "horizon=" << instance.horizon.T << "\n"
          << "states=" << instance.S << "\n"
          << "actions=" << instance.A << "\n"
          << "iterations=" << trace.records.size() << "\n"
          << "stop_reason=" << stop_name(trace.stop_reason) << "\n"
          << "converged=" << (trace.converged() ? 1 : 0) << "\n"
          << "final_potential=" << io::format_double(final_potential) << "\n"
          << "final_fw_gap="
          << io::format_double(trace.records.empty() ? 0.0 : trace.records.back().fw_gap) << "\n"
          << "nash_gap=" << io::format_double(gap.gap) << "\n"
          << "curvature_estimate=" << io::format_double(curvature) << "\n"
          << "gap_tolerance=" << io::format_double(cfg.solver.gap_tolerance) << "\n"
          << "movement_tolerance=" << io::format_double(cfg.solver.movement_tolerance) << "\n"
          << "seed=" << cfg.solver.seed << "\n";
      if (!out) throw std::runtime_error("summary.txt: write failed");
    }

    manifest.finish(true);
    std::cout << "solve: iterations=" << trace.records.size()
              << " potential=" << io::format_double(final_potential)
              << " nash_gap=" << io::format_double(gap.gap)
              << " stop=" << stop_name(trace.stop_reason) << "\n";
    return trace.converged() ? kExitSuccess : kExitIterationCap;
  });
}

int cmd_certify(const CommandOptions& options) {
  return guarded("certify", [&]() -> int {
    io::RunConfig cfg = load_config(options);
    const double tol = options.tol.value_or(1e-4);
    if (tol < 0.0) throw std::runtime_error("--tol must be >= 0");
    if (options.out_dir.empty()) throw std::runtime_error("--out is required");

    const GameInstance instance = io::build_instance(cfg);
    const std::string eq_dir =
        options.equilibrium_dir.empty() ? options.out_dir : options.equilibrium_dir;

    fs::create_directories(options.out_dir);
    StageManifest manifest(options.out_dir, "certify", hex64(io::hash_file(options.config_path)),
                           cfg.solver.seed);

    const JointDistribution x = load_equilibrium(eq_dir, instance);
    double primal = 0.0;
    for (int i = 0; i < instance.num_players; ++i)
      primal = std::max(primal, flow_residual(x.x[i], instance.kernels[i], instance.z0[i]));

    const std::string cert_path = join(options.out_dir, "certificate.txt");
    if (primal > 1e-6) {
      std::ofstream out = open_text(cert_path);
      out << "stage=certify\n"
          << "verdict=infeasible\n"
          << "primal_residual=" << io::format_double(primal) << "\n";
      manifest.finish(false);
      std::cerr << "certify: infeasible input distribution, flow residual "
                << io::format_double(primal) << "\n";
      return kExitInputError;
    }

    const DualCertificate cert = extract_certificate(x, instance);
    const CertificateVerdict verdict = verify_certificate(x, cert, instance, tol);
    const NashGap gap = nash_gap(x, instance.cost_model, instance.kernels);

    {
      std::ofstream out = open_text(cert_path);
      out << "stage=certify\n"
          << "tol=" << io::format_double(tol) << "\n"
          << "primal_residual=" << io::format_double(verdict.primal_residual) << "\n"
          << "dual_feasibility=" << io::format_double(verdict.dual_feasibility) << "\n"
          << "complementary_slackness=" << io::format_double(verdict.complementary_slackness)
          << "\n"
          << "stationarity_residual=" << io::format_double(verdict.stationarity_residual) << "\n"
          << "nash_gap=" << io::format_double(gap.gap) << "\n"
          << "verdict=" << (verdict.pass ? "pass" : "fail") << "\n";
      if (!out) throw std::runtime_error(cert_path + ": write failed");
    }

    manifest.finish(verdict.pass);
    std::cout << "certify: stationarity="
              << io::format_double(verdict.stationarity_residual)
              << " comp_slack=" << io::format_double(verdict.complementary_slackness)
              << " nash_gap=" << io::format_double(gap.gap)
              << " verdict=" << (verdict.pass ? "pass" : "fail") << "\n";
    return verdict.pass ? kExitSuccess : kExitCertificationFailure;
  });
}

int cmd_simulate(const CommandOptions& options) {
  return guarded("simulate", [&]() -> int {
    io::RunConfig cfg = load_config(options);
    if (options.out_dir.empty()) throw std::runtime_error("--out is required");
    if (cfg.scenario_type != "warehouse")
      throw std::runtime_error(
          "simulate requires a warehouse scenario: collision and wait statistics are defined on "
          "the grid");

    const GameInstance instance = warehouse::build_scenario(cfg.scenario);
    const std::vector<warehouse::PlayerSpec> players =
        cfg.scenario.players.empty() ? warehouse::default_players(cfg.scenario)
                                     : cfg.scenario.players;
    const std::string eq_dir =
        options.equilibrium_dir.empty() ? options.out_dir : options.equilibrium_dir;

    fs::create_directories(options.out_dir);
    StageManifest manifest(options.out_dir, "simulate", hex64(io::hash_file(options.config_path)),
                           cfg.rollout.seed);

    const std::string summary_path = join(options.out_dir, "rollout_summary.csv");
    const std::string series_path = join(options.out_dir, "collisions_per_step.csv");

    if (cfg.rollout.trials == 0) {
      rollout::RolloutReport empty;
      empty.trials = 0;
      empty.seed = cfg.rollout.seed;
      empty.collisions_per_time.assign(static_cast<std::size_t>(instance.num_players), {});
      io::write_rollout_summary_csv(summary_path, empty);
      io::write_collision_series_csv(series_path, empty.collisions_per_time);
      manifest.finish(true);
      std::cout << "simulate: trials=0, wrote empty report\n";
      return kExitSuccess;
    }

    const JointDistribution x = load_equilibrium(eq_dir, instance);
    std::vector<rollout::StochasticPolicy> policies;
    policies.reserve(x.x.size());
    for (const StateActionDistribution& xi : x.x)
      policies.push_back(rollout::policy_from_distribution(xi));

    const rollout::TrajectorySet trajectories =
        rollout::sample_trajectories(instance, policies, cfg.rollout.trials, cfg.rollout.seed);
    const rollout::CollisionStats collisions =
        rollout::count_collisions(trajectories, cfg.scenario.grid);
    const rollout::WaitStats waits = rollout::wait_times(trajectories, players);
    const rollout::RolloutReport report = rollout::make_report(
        collisions, waits, instance.horizon.T, cfg.rollout.trials, cfg.rollout.seed);

    io::write_rollout_summary_csv(summary_path, report);
    io::write_collision_series_csv(series_path, report.collisions_per_time);

    manifest.finish(true);
    std::cout << "simulate: trials=" << cfg.rollout.trials << " players="
              << instance.num_players << "\n";
    return kExitSuccess;
  });
}

int cmd_report(const CommandOptions& options) {
  return guarded("report", [&]() -> int {
    if (options.out_dir.empty())
      throw std::runtime_error("--out is required (the run directory to render)");
    const std::string dir = options.out_dir;
    fs::create_directories(dir);
    const std::string config_hash =
        options.config_path.empty() ? "-" : hex64(io::hash_file(options.config_path));
    StageManifest manifest(dir, "report", config_hash, 0);

    bool any = false;

    const std::string trace_path = join(dir, "trace.csv");
    if (fs::exists(trace_path)) {
      const io::TraceTable trace = io::read_trace_csv(trace_path);
      io::LineChart chart;
      chart.title = "Solver convergence";
      chart.x_label = "iteration k";
      chart.y_label = "flow L2 norm / movement";
      chart.log_y = true;
      for (int i = 0; i < trace.num_players; ++i) {
        io::Series norm{"norm_" + std::to_string(i + 1), {}, {}};
        io::Series movement{"movement_" + std::to_string(i + 1), {}, {}};
        for (const IterationRecord& rec : trace.records) {
          norm.x.push_back(rec.k);
          norm.y.push_back(rec.norm[i]);
          movement.x.push_back(rec.k);
          movement.y.push_back(rec.movement[i]);
        }
        chart.series.push_back(std::move(norm));
        chart.series.push_back(std::move(movement));
      }
      io::write_line_chart(join(dir, "convergence.svg"), chart);
      any = true;
    } else {
      std::cerr << "report: warning: trace.csv not found, skipping convergence.svg\n";
    }

    const std::string series_path = join(dir, "collisions_per_step.csv");
    if (fs::exists(series_path)) {
      const std::vector<std::vector<double>> series = io::read_collision_series_csv(series_path);
      io::LineChart chart;
      chart.title = "Mean collisions per stage";
      chart.x_label = "stage t";
      chart.y_label = "mean collisions";
      for (std::size_t i = 0; i < series.size(); ++i) {
        io::Series s{"player_" + std::to_string(i + 1), {}, {}};
        for (std::size_t t = 0; t < series[i].size(); ++t) {
          s.x.push_back(static_cast<double>(t));
          s.y.push_back(series[i][t]);
        }
        chart.series.push_back(std::move(s));
      }
      io::write_line_chart(join(dir, "collisions.svg"), chart);
      any = true;
    } else {
      std::cerr << "report: warning: collisions_per_step.csv not found, skipping collisions.svg\n";
    }

    const std::string summary_path = join(dir, "rollout_summary.csv");
    if (fs::exists(summary_path)) {
      const rollout::RolloutReport report = io::read_rollout_summary_csv(summary_path);
      io::BarChart chart;
      chart.title = "Package wait times";
      chart.y_label = "stages";
      chart.series_names = {"mean_wait", "worst_wait"};
      for (const rollout::RolloutReport::Row& row : report.rows)
        chart.groups.push_back(
            {"player_" + std::to_string(row.player), {row.mean_wait, row.worst_wait}});
      io::write_bar_chart(join(dir, "wait_times.svg"), chart);
      any = true;
    } else {
      std::cerr << "report: warning: rollout_summary.csv not found, skipping wait_times.svg\n";
    }

    manifest.finish(any);
    if (!any) {
      std::cerr << "report: no renderable artifacts in " << dir << "\n";
      return kExitInputError;
    }
    return kExitSuccess;
  });
}

}  // namespace mdpcg::cli
