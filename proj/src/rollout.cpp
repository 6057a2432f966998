#include "mdpcg/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mdpcg::rollout {

StochasticPolicy policy_from_distribution(const StateActionDistribution& x) {
  StochasticPolicy p;
  p.T = x.horizon();
  p.S = x.num_states();
  p.A = x.num_actions();
  p.pi.resize(x.size());
  const double uniform = 1.0 / p.A;
  for (int t = 0; t <= p.T; ++t) {
    for (int s = 0; s < p.S; ++s) {
      const double mass = x.state_sum(t, s);
      double* row = p.pi.data() + x.idx(t, s, 0);
      if (mass <= 1e-12) {
        for (int a = 0; a < p.A; ++a) row[a] = uniform;
      } else {
        for (int a = 0; a < p.A; ++a) row[a] = x.at(t, s, a) / mass;
      }
    }
  }
  return p;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 stream_rng(std::uint64_t master, std::uint64_t trial, std::uint64_t player) {
  std::uint64_t state = master ^ (0xd1b54a32d192ed03ULL * (trial + 1)) ^
                        (0x94d049bb133111ebULL * (player + 1));
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  return std::mt19937_64(a ^ (b << 1));
}

double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_index(const double* weights, int n, int stride, std::mt19937_64& rng) {
  const double u = next_uniform(rng);
  double acc = 0.0;
  int last = 0;
  for (int k = 0; k < n; ++k) {
    const double w = weights[static_cast<std::size_t>(k) * stride];
    if (w <= 0.0) continue;
    acc += w;
    last = k;
    if (u < acc) return k;
  }
  return last;  // guard against accumulated roundoff just below 1
}

}  // namespace

TrajectorySet sample_trajectories(const GameInstance& instance,
                                  const std::vector<StochasticPolicy>& policies, int trials,
                                  std::uint64_t seed) {
  const int N = instance.num_players, T = instance.horizon.T;
  const int S = instance.S, A = instance.A;
  if (static_cast<int>(policies.size()) != N)
    throw std::invalid_argument("sample_trajectories: policy count mismatch");
  for (const auto& p : policies)
    if (p.T != T || p.S != S || p.A != A)
      throw std::invalid_argument("sample_trajectories: policy shape mismatch");
  if (trials < 0) throw std::invalid_argument("sample_trajectories: negative trial count");

  TrajectorySet out;
  out.trials = trials;
  out.seed = seed;
  out.per_trial.assign(trials, std::vector<Trajectory>(N));
  for (int trial = 0; trial < trials; ++trial) {
    for (int i = 0; i < N; ++i) {
      std::mt19937_64 rng = stream_rng(seed, trial, i);
      Trajectory& traj = out.per_trial[trial][i];
      traj.states.resize(T + 1);
      traj.actions.resize(T + 1);

      int s = sample_index(instance.z0[i].z.data(), S, 1, rng);
      traj.states[0] = s;
      for (int t = 1; t <= T; ++t) {
        const int a = sample_index(policies[i].pi.data() +
                                       (static_cast<std::size_t>(t - 1) * S + s) * A,
                                   A, 1, rng);
        traj.actions[t - 1] = a;
        // Destination column of (s, a): stride S*A over s_to.
        const double* col = instance.kernels[i].stage_data(t) +
                            static_cast<std::size_t>(s) * A + a;
        s = sample_index(col, S, S * A, rng);
        traj.states[t] = s;
      }
      traj.actions[T] = sample_index(
          policies[i].pi.data() + (static_cast<std::size_t>(T) * S + s) * A, A, 1, rng);
    }
  }
  return out;
}

CollisionStats count_collisions(const TrajectorySet& trajectories,
                                const warehouse::GridSpec& grid) {
  CollisionStats stats;
  if (trajectories.per_trial.empty() && trajectories.trials == 0) return stats;
  const int N = trajectories.per_trial.empty()
                    ? 0
                    : static_cast<int>(trajectories.per_trial[0].size());
  const int T = N > 0 ? static_cast<int>(trajectories.per_trial[0][0].states.size()) - 1 : -1;
  stats.per_player_per_time.assign(N, std::vector<double>(T + 1, 0.0));
  stats.per_player_total.assign(N, 0.0);
  if (trajectories.trials == 0 || N == 0) return stats;

  for (const auto& trial : trajectories.per_trial) {
    for (int t = 0; t <= T; ++t) {
      for (int i = 0; i < N; ++i) {
        const int loc_i = trial[i].states[t] / warehouse::GridSpec::modes;
        for (int j = i + 1; j < N; ++j) {
          const int loc_j = trial[j].states[t] / warehouse::GridSpec::modes;
          if (loc_i == loc_j) {
            stats.per_player_per_time[i][t] += 1.0;
            stats.per_player_per_time[j][t] += 1.0;
          }
        }
      }
    }
  }
  const double inv = 1.0 / trajectories.trials;
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t <= T; ++t) {
      stats.per_player_per_time[i][t] *= inv;
      stats.per_player_total[i] += stats.per_player_per_time[i][t];
    }
  }
  (void)grid;
  return stats;
}

WaitStats wait_times(const TrajectorySet& trajectories,
                     const std::vector<warehouse::PlayerSpec>& players) {
  const int N = static_cast<int>(players.size());
  WaitStats stats;
  stats.waits.assign(N, {});
  stats.mean_wait.assign(N, 0.0);
  stats.worst_wait.assign(N, 0.0);
  stats.completed_per_trial.assign(N, 0.0);
  stats.incomplete_per_trial.assign(N, 0.0);
  if (trajectories.trials == 0) return stats;

  for (const auto& trial : trajectories.per_trial) {
    if (static_cast<int>(trial.size()) != N)
      throw std::invalid_argument("wait_times: player count mismatch");
    for (int i = 0; i < N; ++i) {
      const auto& states = trial[i].states;
      const int T = static_cast<int>(states.size()) - 1;
      int cycle_start = 0;
      for (int t = 1; t <= T; ++t) {
        const auto before = warehouse::state_mode(states[t - 1]);
        const auto now = warehouse::state_mode(states[t]);
        if (before == warehouse::Mode::Dropoff && now == warehouse::Mode::Pickup) {
          stats.waits[i].push_back(static_cast<double>(t - cycle_start));
          cycle_start = t;
        }
      }
      if (cycle_start < T) stats.incomplete_per_trial[i] += 1.0;
    }
  }

  const double inv = 1.0 / trajectories.trials;
  for (int i = 0; i < N; ++i) {
    stats.incomplete_per_trial[i] *= inv;
    stats.completed_per_trial[i] = static_cast<double>(stats.waits[i].size()) * inv;
    if (!stats.waits[i].empty()) {
      double sum = 0.0, worst = 0.0;
      for (double w : stats.waits[i]) {
        sum += w;
        worst = std::max(worst, w);
      }
      stats.mean_wait[i] = sum / static_cast<double>(stats.waits[i].size());
      stats.worst_wait[i] = worst;
    }
  }
  return stats;
}

RolloutReport make_report(const CollisionStats& collisions, const WaitStats& waits, int horizon,
                          int trials, std::uint64_t seed) {
  RolloutReport report;
  report.trials = trials;
  report.seed = seed;
  report.collisions_per_time = collisions.per_player_per_time;
  const int N = static_cast<int>(waits.mean_wait.size());
  report.rows.resize(N);
  for (int i = 0; i < N; ++i) {
    auto& row = report.rows[i];
    row.player = i + 1;
    row.mean_collisions = i < static_cast<int>(collisions.per_player_total.size())
                              ? collisions.per_player_total[i]
                              : 0.0;
    row.collisions_per_step = row.mean_collisions / static_cast<double>(horizon + 1);
    row.mean_wait = waits.mean_wait[i];
    row.worst_wait = waits.worst_wait[i];
    row.completed_mean = waits.completed_per_trial[i];
    row.incomplete_mean = waits.incomplete_per_trial[i];
  }
  return report;
}

}  // namespace mdpcg::rollout
