#pragma once

// Monte Carlo evaluation of solved equilibria on the warehouse scenario.
//
// Each (trial, player) pair draws from its own RNG stream derived from the
// master seed, so raising the trial count extends a run without reshuffling
// the trials already sampled, and players within a trial stay independent.

#include <cstdint>
#include <vector>

#include "mdpcg/mdp.hpp"
#include "mdpcg/solver.hpp"
#include "mdpcg/warehouse.hpp"

namespace mdpcg::rollout {

// Row-normalized policy pi[t][s][a]. Rows of the source flow with mass at or
// below 1e-12 fall back to uniform (the chain may still visit such states).
struct StochasticPolicy {
  int T = 0, S = 0, A = 0;
  std::vector<double> pi;
  double at(int t, int s, int a) const {
    return pi[(static_cast<std::size_t>(t) * S + s) * A + a];
  }
};

StochasticPolicy policy_from_distribution(const StateActionDistribution& x);

struct Trajectory {
  std::vector<int> states;   // s(0..T)
  std::vector<int> actions;  // a(0..T); a(T) is drawn but never transitions
};

struct TrajectorySet {
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Trajectory>> per_trial;  // [trial][player]
};

// Samples each player's chain independently per trial: s0 from z, actions
// from the policy, successors from the player's kernel. Deterministic given
// the seed.
TrajectorySet sample_trajectories(const GameInstance& instance,
                                  const std::vector<StochasticPolicy>& policies, int trials,
                                  std::uint64_t seed);

struct CollisionStats {
  // Mean over trials of per-player collision counts; a collision is an
  // unordered pair sharing a grid cell (mode ignored) at one stage, counted
  // once for each member of the pair.
  std::vector<std::vector<double>> per_player_per_time;  // [player][t]
  std::vector<double> per_player_total;                  // sum over t
};

CollisionStats count_collisions(const TrajectorySet& trajectories,
                                const warehouse::GridSpec& grid);

struct WaitStats {
  // A package's wait is the stage count between consecutive deliveries
  // (Dropoff -> Pickup mode switches; the kernel only allows them at the drop
  // chute), with the first cycle starting at t = 0. A cycle still open at the
  // horizon is excluded from the mean and counted as incomplete.
  std::vector<std::vector<double>> waits;   // completed waits per player, pooled over trials
  std::vector<double> mean_wait;            // 0 when no completed cycle
  std::vector<double> worst_wait;
  std::vector<double> completed_per_trial;  // mean completed cycles
  std::vector<double> incomplete_per_trial; // mean cycles left open at the horizon
};

WaitStats wait_times(const TrajectorySet& trajectories,
                     const std::vector<warehouse::PlayerSpec>& players);

struct RolloutReport {
  struct Row {
    int player = 0;                 // 1-based
    double mean_collisions = 0;     // per horizon
    double collisions_per_step = 0;
    double mean_wait = 0;
    double worst_wait = 0;
    double completed_mean = 0;
    double incomplete_mean = 0;
  };
  std::vector<Row> rows;
  std::vector<std::vector<double>> collisions_per_time;  // [player][t], trial means
  int trials = 0;
  std::uint64_t seed = 0;
};

RolloutReport make_report(const CollisionStats& collisions, const WaitStats& waits, int horizon,
                          int trials, std::uint64_t seed);

}  // namespace mdpcg::rollout
