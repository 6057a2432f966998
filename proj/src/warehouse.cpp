#include "mdpcg/warehouse.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mdpcg::warehouse {

Location action_target(Location u, int a) {
  switch (a) {
    case kUp: return {u.v - 1, u.w};
    case kDown: return {u.v + 1, u.w};
    case kRight: return {u.v, u.w + 1};
    case kLeft: return {u.v, u.w - 1};
    case kStay: return u;
    default: throw std::invalid_argument("action_target: unknown action");
  }
}

std::vector<Location> neighbor_set(const GridSpec& grid, Location u) {
  std::vector<Location> n;
  n.push_back(u);
  for (int a = 0; a < kNumActions - 1; ++a) {  // the four moves
    const Location t = action_target(u, a);
    if (grid.contains(t)) n.push_back(t);
  }
  return n;
}

std::vector<double> build_location_kernel(const GridSpec& grid, double q) {
  const int L = grid.locations();
  std::vector<double> p(static_cast<std::size_t>(L) * L * kNumActions, 0.0);
  auto entry = [&](int loc_to, int loc_from, int a) -> double& {
    return p[(static_cast<std::size_t>(loc_to) * L + loc_from) * kNumActions + a];
  };
  for (int v = 0; v < grid.rows; ++v) {
    for (int w = 0; w < grid.cols; ++w) {
      const Location u{v, w};
      const int from = location_index(grid, u);
      const std::vector<Location> hood = neighbor_set(grid, u);
      for (int a = 0; a < kNumActions; ++a) {
        const Location target = action_target(u, a);
        if (grid.contains(target)) {
          entry(location_index(grid, target), from, a) = q;
          if (hood.size() > 1) {
            const double rest = (1.0 - q) / (static_cast<double>(hood.size()) - 1.0);
            for (const Location& n : hood)
              if (n != target) entry(location_index(grid, n), from, a) += rest;
          } else {
            entry(location_index(grid, target), from, a) = 1.0;
          }
        } else {
          const double each = 1.0 / static_cast<double>(hood.size());
          for (const Location& n : hood) entry(location_index(grid, n), from, a) += each;
        }
      }
    }
  }
  return p;
}

double arrival_probability(double lambda, double dt, bool complement) {
  if (lambda < 0.0 || dt <= 0.0)
    throw std::invalid_argument("arrival_probability: need lambda >= 0 and dt > 0");
  const double base = std::exp(-lambda * dt);
  return complement ? 1.0 - base : base;
}

std::vector<PlayerSpec> default_players(const ScenarioConfig& config) {
  static const Location kPickups[] = {{4, 8}, {4, 7}, {4, 2}};
  static const Location kDropoffs[] = {{0, 4}, {0, 5}, {0, 8}};
  if (config.num_players < 1 || config.num_players > 3)
    throw std::invalid_argument(
        "default_players: stock chute assignment covers 1..3 players; list players explicitly");
  std::vector<PlayerSpec> players(config.num_players);
  for (int i = 0; i < config.num_players; ++i) {
    players[i].pickup = kPickups[i];
    players[i].dropoff = kDropoffs[i];
    players[i].lambda = config.lambda;
    players[i].alpha = i < static_cast<int>(config.alpha.size()) ? config.alpha[i] : 1.0;
    players[i].initial_location = kDropoffs[i];
    players[i].initial_mode = Mode::Pickup;
  }
  return players;
}

TransitionKernel build_full_kernel(const GridSpec& grid, const PlayerSpec& player, double q,
                                   double dt, int T, bool arrival_complement) {
  const int L = grid.locations();
  const int S = grid.states();
  const double r = arrival_probability(player.lambda, dt, arrival_complement);
  const std::vector<double> loc_kernel = build_location_kernel(grid, q);
  const int pick = location_index(grid, player.pickup);
  const int drop = location_index(grid, player.dropoff);

  std::vector<double> slice(static_cast<std::size_t>(S) * S * kNumActions, 0.0);
  auto put = [&](int s_to, int s_from, int a, double mass) {
    slice[(static_cast<std::size_t>(s_to) * S + s_from) * kNumActions + a] += mass;
  };
  for (int from = 0; from < L; ++from) {
    for (int mi = 0; mi < GridSpec::modes; ++mi) {
      const Mode m = static_cast<Mode>(mi);
      const int s_from = from * GridSpec::modes + mi;
      for (int a = 0; a < kNumActions; ++a) {
        for (int to = 0; to < L; ++to) {
          const double pm = loc_kernel[(static_cast<std::size_t>(to) * L + from) * kNumActions + a];
          if (pm == 0.0) continue;
          if (m == Mode::Pickup && to == pick) {
            // Package available with probability r on arrival at the chute.
            put(to * GridSpec::modes + static_cast<int>(Mode::Dropoff), s_from, a, pm * r);
            put(to * GridSpec::modes + static_cast<int>(Mode::Pickup), s_from, a, pm * (1.0 - r));
          } else if (m == Mode::Dropoff && to == drop) {
            // Delivery: always back to Pickup mode.
            put(to * GridSpec::modes + static_cast<int>(Mode::Pickup), s_from, a, pm);
          } else {
            put(to * GridSpec::modes + mi, s_from, a, pm);
          }
        }
      }
    }
  }

  TransitionKernel kernel(T, S, kNumActions);
  kernel.fill_stationary(slice);
  return kernel;
}

CostModel build_cost_model(const GridSpec& grid, const std::vector<PlayerSpec>& players,
                           const ScenarioConfig& config) {
  const int N = static_cast<int>(players.size());
  const int S = grid.states();
  const int T = config.horizon;
  CostModel model = CostModel::zeros(N, T, S, kNumActions);

  for (int i = 0; i < N; ++i) model.alpha.alpha[i] = players[i].alpha;
  for (int s = 0; s < S; ++s) model.state_group[s] = s / GridSpec::modes;

  // Congestion barrier: sign * beta * exp(beta * (w - 1)) on the cross-mode
  // location mass. Written as c2 * exp(c3 * w) with c2 = sign * beta *
  // exp(-beta). beta = 0 turns congestion off entirely.
  const double sign = config.paper_literal_congestion_sign ? -1.0 : 1.0;
  const CostPrimitive fprim =
      config.beta != 0.0
          ? CostPrimitive::exponential(sign * config.beta * std::exp(-config.beta), config.beta)
          : CostPrimitive::constant(0.0);
  for (auto& p : model.f) p = fprim;

  // Own-flow cost epsilon * x - c, with a unit reward for being at the pick
  // chute in Pickup mode or the drop chute in Dropoff mode.
  for (int i = 0; i < N; ++i) {
    const int reward_pick = state_index(grid, players[i].pickup, Mode::Pickup);
    const int reward_drop = state_index(grid, players[i].dropoff, Mode::Dropoff);
    for (int t = 0; t <= T; ++t)
      for (int s = 0; s < S; ++s) {
        const double c0 = (s == reward_pick || s == reward_drop) ? -1.0 : 0.0;
        for (int a = 0; a < kNumActions; ++a)
          model.h_at(i, t, s, a) = CostPrimitive::linear(c0, config.epsilon);
      }
  }
  return model;
}

GameInstance build_scenario(const ScenarioConfig& config) {
  if (!(config.q > 0.0 && config.q < 1.0))
    throw std::invalid_argument("build_scenario: q must lie in (0, 1)");
  if (config.horizon < 1) throw std::invalid_argument("build_scenario: horizon must be >= 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("build_scenario: epsilon must be > 0");
  if (config.beta < 0.0) throw std::invalid_argument("build_scenario: beta must be >= 0");
  if (config.grid.rows < 1 || config.grid.cols < 1)
    throw std::invalid_argument("build_scenario: empty grid");
  if (config.dt <= 0.0) throw std::invalid_argument("build_scenario: dt must be > 0");

  std::vector<PlayerSpec> players = config.players;
  if (players.empty()) players = default_players(config);
  if (config.num_players != static_cast<int>(players.size()))
    throw std::invalid_argument("build_scenario: num_players does not match player list");

  for (std::size_t i = 0; i < players.size(); ++i) {
    auto check = [&](Location u, const char* what) {
      if (!config.grid.contains(u)) {
        std::ostringstream os;
        os << "build_scenario: " << what << " of player " << i + 1 << " at (" << u.v << "," << u.w
           << ") lies outside the " << config.grid.rows << "x" << config.grid.cols << " grid";
        throw std::invalid_argument(os.str());
      }
    };
    check(players[i].pickup, "pick chute");
    check(players[i].dropoff, "drop chute");
    check(players[i].initial_location, "initial location");
    if (!(players[i].alpha > 0.0))
      throw std::invalid_argument("build_scenario: impact factors must be positive");
    if (players[i].lambda < 0.0)
      throw std::invalid_argument("build_scenario: lambda must be >= 0");
  }

  GameInstance inst;
  inst.num_players = static_cast<int>(players.size());
  inst.horizon.T = config.horizon;
  inst.S = config.grid.states();
  inst.A = kNumActions;
  inst.kernels.reserve(players.size());
  inst.z0.reserve(players.size());
  for (const PlayerSpec& p : players) {
    inst.kernels.push_back(build_full_kernel(config.grid, p, config.q, config.dt, config.horizon,
                                             config.arrival_complement));
    inst.z0.push_back(InitialDistribution::point(
        inst.S, state_index(config.grid, p.initial_location, p.initial_mode)));
  }
  inst.cost_model = build_cost_model(config.grid, players, config);
  // The literal negative congestion sign is not monotone; let the instance
  // through for fidelity comparisons.
  inst.allow_inadmissible_costs = config.paper_literal_congestion_sign;
  return inst;
}

}  // namespace mdpcg::warehouse
