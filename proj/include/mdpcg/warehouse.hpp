#pragma once

// Multi-robot warehouse pickup/delivery scenario.
//
// State space: grid cell (v, w) x mode. Mode Pickup means the robot is
// heading to its pick chute, mode Dropoff means it carries a package. Robots
// move up/down/right/left/stay with success probability q; the rest of the
// mass spreads over the remaining reachable neighborhood. Landing on the
// pick chute while in Pickup mode switches to Dropoff mode with the package
// arrival probability r; landing on the drop chute while in Dropoff mode
// always switches back to Pickup.
//
// State index: (v * cols + w) * 2 + mode, so both modes of one cell are
// adjacent and share a congestion group. Coordinates are zero-based,
// v in [0, rows), w in [0, cols); Up decreases v.

#include <string>
#include <vector>

#include "mdpcg/game.hpp"
#include "mdpcg/mdp.hpp"
#include "mdpcg/solver.hpp"

namespace mdpcg::warehouse {

enum class Mode : int { Pickup = 0, Dropoff = 1 };

enum MoveAction : int { kUp = 0, kDown = 1, kRight = 2, kLeft = 3, kStay = 4 };
inline constexpr int kNumActions = 5;

struct Location {
  int v = 0, w = 0;
  bool operator==(const Location& o) const { return v == o.v && w == o.w; }
  bool operator!=(const Location& o) const { return !(*this == o); }
};

struct GridSpec {
  int rows = 5;
  int cols = 10;
  static constexpr int modes = 2;
  int locations() const { return rows * cols; }
  int states() const { return locations() * modes; }
  bool contains(Location u) const { return u.v >= 0 && u.v < rows && u.w >= 0 && u.w < cols; }
};

inline int location_index(const GridSpec& grid, Location u) { return u.v * grid.cols + u.w; }
inline int state_index(const GridSpec& grid, Location u, Mode m) {
  return location_index(grid, u) * GridSpec::modes + static_cast<int>(m);
}
inline Location state_location(const GridSpec& grid, int s) {
  const int loc = s / GridSpec::modes;
  return {loc / grid.cols, loc % grid.cols};
}
inline Mode state_mode(int s) { return static_cast<Mode>(s % GridSpec::modes); }

// Target cell of an action, before feasibility clipping.
Location action_target(Location u, int a);

// The cell itself plus its in-grid orthogonal neighbors.
std::vector<Location> neighbor_set(const GridSpec& grid, Location u);

// Location-level movement kernel, dense L x L x A flattened as
// (loc_to * L + loc_from) * A + a. Feasible action: probability q to the
// target, (1 - q) split evenly over the rest of the neighbor set. Infeasible
// action (target off-grid): uniform over the neighbor set.
std::vector<double> build_location_kernel(const GridSpec& grid, double q);

// Probability that a package is available on arrival at the pick chute.
// exp(-lambda * dt) as printed in the source model; the complement variant
// returns 1 - exp(-lambda * dt) for the reading "probability that at least
// one package arrived".
double arrival_probability(double lambda, double dt, bool complement = false);

struct PlayerSpec {
  Location pickup;
  Location dropoff;
  double lambda = 0.5;
  double alpha = 1.0;
  Location initial_location;  // defaults to the drop chute
  Mode initial_mode = Mode::Pickup;
};

struct ScenarioConfig {
  int num_players = 3;
  GridSpec grid;
  double q = 0.98;
  double gamma = 0.99;        // value-iteration discount, applied only when use_discount
  bool use_discount = false;
  double lambda = 0.5;        // default per-player package rate
  std::vector<double> alpha = {0.5, 1.0, 1.5};
  double dt = 1.0;
  int horizon = 120;
  double epsilon = 1e-3;      // own-flow regularizer slope, > 0
  double beta = 40.0;         // congestion barrier weight, >= 0
  bool paper_literal_congestion_sign = false;  // negative-sign congestion (inadmissible)
  bool arrival_complement = false;             // use 1 - exp(-lambda dt)
  // Explicit player list; empty selects the default chute assignment below.
  std::vector<PlayerSpec> players;
};

// The three stock players: pickups (4,8), (4,7), (4,2); dropoffs (0,4),
// (0,5), (0,8); each starting at its drop chute in Pickup mode. Takes
// lambda/alpha defaults from the config.
std::vector<PlayerSpec> default_players(const ScenarioConfig& config);

// Stationary two-mode kernel for one player, replicated over t = 1..T.
TransitionKernel build_full_kernel(const GridSpec& grid, const PlayerSpec& player, double q,
                                   double dt, int T, bool arrival_complement = false);

// Congestion cost model:
//   h^i(x) = epsilon * x - 1{(s) is (pickup, Pickup) or (dropoff, Dropoff) of i}
//   f(w)   = sign * beta * exp(beta * (w - 1)), argument = cross-mode location mass of y
//   g      = 0
CostModel build_cost_model(const GridSpec& grid, const std::vector<PlayerSpec>& players,
                           const ScenarioConfig& config);

// Full game instance. Validates config ranges (q in (0,1), epsilon > 0,
// beta >= 0, chutes inside the grid) and throws std::invalid_argument on any
// violation. With the literal congestion sign the instance is flagged to
// allow inadmissible costs, since that sign breaks monotonicity.
GameInstance build_scenario(const ScenarioConfig& config);

}  // namespace mdpcg::warehouse
