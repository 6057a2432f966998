#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdpcg/game.hpp"
#include "mdpcg/mdp.hpp"
#include "mdpcg/solver.hpp"
#include "mdpcg/warehouse.hpp"
#include "oracles.hpp"

using namespace mdpcg;

namespace {

// One player, flow-independent costs (constant h), everything else zero.
// Equilibria are exactly the value-iteration solutions of the fixed costs.
GameInstance fixed_cost_instance(std::uint64_t seed) {
  const int T = 3, S = 3, A = 2;
  auto rng = oracles::seeded_rng(seed);
  GameInstance instance;
  instance.num_players = 1;
  instance.horizon.T = T;
  instance.S = S;
  instance.A = A;
  instance.kernels = {oracles::random_kernel(T, S, A, rng)};
  instance.z0 = {oracles::random_initial(S, rng)};
  instance.cost_model = CostModel::zeros(1, T, S, A);
  const StageCosts fixed = oracles::random_costs(T, S, A, rng);
  for (int t = 0; t <= T; ++t)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        instance.cost_model.h_at(0, t, s, a) = CostPrimitive::constant(fixed.at(t, s, a));
  instance.allow_inadmissible_costs = true;  // constant h is not strictly increasing
  return instance;
}

double max_movement(const IterationRecord& r) {
  return *std::max_element(r.movement.begin(), r.movement.end());
}

}  // namespace

TEST_CASE("frank_wolfe solves a fixed-cost single player in one full step") {
  const GameInstance instance = fixed_cost_instance(17);
  SolveOptions options;
  options.max_iterations = 10;
  const auto [x, trace] = frank_wolfe(instance, options);

  // k=1 takes the full step onto the best response; k=2 recombines two equal
  // flows, leaving only rounding residue, so both tolerances are met there.
  REQUIRE(trace.records.size() == 2);
  CHECK(trace.stop_reason == StopReason::Tolerances);
  CHECK(trace.converged());
  CHECK(trace.records[1].fw_gap <= 1e-14);
  CHECK(max_movement(trace.records[1]) <= 1e-14);

  const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
  const ValueIterationResult vi = value_iteration(costs[0], instance.kernels[0]);
  const StateActionDistribution best =
      retrieve_density(instance.kernels[0], instance.z0[0], vi.policy);
  CHECK(x.x[0].l2_distance(best) <= 1e-14);
  CHECK(nash_gap(x, instance.cost_model, instance.kernels).gap <= 1e-12);
}

TEST_CASE("frank_wolfe reaches the potential minimizer of an admissible game") {
  // Seed 10 has an interior-support equilibrium, so the support-thresholded
  // gap stays meaningful even with the O(1/k^2) dust the step rule leaves on
  // early extreme points.
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 10);
  SolveOptions options;
  options.max_iterations = 10000;
  options.gap_tolerance = 1e-300;       // disable early stop: exercise the cap
  options.movement_tolerance = 1e-300;
  const auto [x, trace] = frank_wolfe(instance, options);
  CHECK(trace.stop_reason == StopReason::IterationCap);

  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  CHECK(std::abs(potential(x, instance.cost_model) - opt.potential) <= 1e-4);
  CHECK(nash_gap(x, instance.cost_model, instance.kernels).gap <= 1e-3);
}

TEST_CASE("frank_wolfe iterates stay feasible at any iteration cap") {
  const GameInstance instance = oracles::random_game_instance(3, 3, 3, 2, 223);
  for (int cap : {1, 7, 23}) {
    SolveOptions options;
    options.max_iterations = cap;
    const auto [x, trace] = frank_wolfe(instance, options);
    for (int i = 0; i < instance.num_players; ++i)
      CHECK(flow_residual(x.x[i], instance.kernels[i], instance.z0[i]) <= 1e-9);
  }
}

TEST_CASE("frank_wolfe trace bookkeeping is consistent") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 3, 2, 227);
  SolveOptions options;
  options.max_iterations = 25;
  const auto [x, trace] = frank_wolfe(instance, options);
  REQUIRE(trace.records.size() == 25);
  for (std::size_t j = 0; j < trace.records.size(); ++j) {
    const IterationRecord& r = trace.records[j];
    CHECK(r.k == static_cast<int>(j) + 1);
    CHECK(r.movement.size() == 2);
    CHECK(r.norm.size() == 2);
    CHECK(r.fw_gap >= 0.0);
    CHECK(std::isfinite(r.potential));
  }
  // The last recorded norm matches the returned joint flow.
  for (int i = 0; i < 2; ++i)
    CHECK(trace.records.back().norm[i] == doctest::Approx(x.x[i].l2_norm()).epsilon(1e-15));
}

TEST_CASE("frank_wolfe envelope and strong convexity against the oracle minimum") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 229);
  SolveOptions options;
  options.max_iterations = 60;
  options.gap_tolerance = 1e-300;
  options.movement_tolerance = 1e-300;
  const auto [x, trace] = frank_wolfe(instance, options);

  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  double best = opt.potential;
  for (const IterationRecord& r : trace.records) best = std::min(best, r.potential);

  const double curvature_bound = 4.0 * estimate_curvature(instance, 32, 229);
  for (const IterationRecord& r : trace.records)
    CHECK(r.potential - best <= 2.0 * curvature_bound / (r.k + 2));

  // Iterates approach the unique minimizer no slower than the potential gap
  // allows under the model's strong convexity.
  const double sc = instance.cost_model.strong_convexity_lower_bound();
  REQUIRE(sc > 0.0);
  for (int k : {1, 3, 10, 30, 60}) {
    SolveOptions partial = options;
    partial.max_iterations = k;
    const auto [xk, t2] = frank_wolfe(instance, partial);
    double dist2 = 0.0;
    for (int i = 0; i < instance.num_players; ++i) {
      const double d = xk.x[i].l2_distance(opt.x.x[i]);
      dist2 += d * d;
    }
    CHECK(0.5 * sc * dist2 <= potential(xk, instance.cost_model) - best + 1e-8);
  }
}

TEST_CASE("frank_wolfe is deterministic and thread-count independent") {
  const GameInstance instance = oracles::random_game_instance(3, 2, 3, 2, 233);
  SolveOptions options;
  options.max_iterations = 40;
  const auto [x1, t1] = frank_wolfe(instance, options);
  const auto [x2, t2] = frank_wolfe(instance, options);
  SolveOptions par = options;
  par.parallel = true;
  const auto [x3, t3] = frank_wolfe(instance, par);

  REQUIRE(t1.records.size() == t2.records.size());
  REQUIRE(t1.records.size() == t3.records.size());
  for (std::size_t j = 0; j < t1.records.size(); ++j) {
    CHECK(t1.records[j].potential == t2.records[j].potential);
    CHECK(t1.records[j].fw_gap == t2.records[j].fw_gap);
    CHECK(t1.records[j].potential == t3.records[j].potential);
    CHECK(t1.records[j].fw_gap == t3.records[j].fw_gap);
    for (int i = 0; i < 3; ++i) {
      CHECK(t1.records[j].movement[i] == t2.records[j].movement[i]);
      CHECK(t1.records[j].movement[i] == t3.records[j].movement[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(x1.x[i].l2_distance(x2.x[i]) == 0.0);
    CHECK(x1.x[i].l2_distance(x3.x[i]) == 0.0);
  }
}

TEST_CASE("frank_wolfe sequential updates also reach the minimizer") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 239);
  SolveOptions options;
  options.max_iterations = 2000;
  options.sequential_updates = true;
  const auto [x, trace] = frank_wolfe(instance, options);
  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  CHECK(std::abs(potential(x, instance.cost_model) - opt.potential) <= 1e-3);
}

TEST_CASE("frank_wolfe validates options and instance up front") {
  const GameInstance instance = oracles::random_game_instance(1, 2, 2, 2, 241);
  SolveOptions bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(frank_wolfe(instance, bad), std::invalid_argument);

  SolveOptions zero_tol;
  zero_tol.gap_tolerance = 0.0;
  CHECK_THROWS_AS(frank_wolfe(instance, zero_tol), std::invalid_argument);

  GameInstance broken = instance;
  broken.kernels[0].at(1, 0, 0, 0) += 0.5;  // column no longer sums to 1
  CHECK_THROWS_AS(frank_wolfe(broken, SolveOptions{}), std::invalid_argument);

  GameInstance flat = instance;
  for (auto& prim : flat.cost_model.h[0]) prim = CostPrimitive::constant(1.0);
  CHECK_THROWS_AS(frank_wolfe(flat, SolveOptions{}), std::invalid_argument);
  flat.allow_inadmissible_costs = true;
  CHECK_NOTHROW(frank_wolfe(flat, SolveOptions{}));
}

TEST_CASE("fw_gap is zero against itself and positive against a better response") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 251);
  JointDistribution x;
  for (int i = 0; i < 2; ++i)
    x.x.push_back(uniform_policy_flow(instance.kernels[i], instance.z0[i]));
  const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
  CHECK(fw_gap(x, x, costs) == 0.0);

  JointDistribution b;
  for (int i = 0; i < 2; ++i) {
    const ValueIterationResult vi = value_iteration(costs[i], instance.kernels[i]);
    b.x.push_back(retrieve_density(instance.kernels[i], instance.z0[i], vi.policy));
  }
  CHECK(fw_gap(x, b, costs) > 1e-4);
}

TEST_CASE("fw_gap vanishes at an equilibrium against its own best response") {
  const GameInstance instance = fixed_cost_instance(257);
  SolveOptions options;
  options.max_iterations = 10;
  const auto [x, trace] = frank_wolfe(instance, options);
  REQUIRE(trace.converged());
  const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
  JointDistribution b;
  const ValueIterationResult vi = value_iteration(costs[0], instance.kernels[0]);
  b.x.push_back(retrieve_density(instance.kernels[0], instance.z0[0], vi.policy));
  CHECK(fw_gap(x, b, costs) <= 1e-8);
}

TEST_CASE("estimate_curvature is zero for a linear potential") {
  const int T = 2, S = 2, A = 2;
  auto rng = oracles::seeded_rng(263);
  GameInstance instance;
  instance.num_players = 2;
  instance.horizon.T = T;
  instance.S = S;
  instance.A = A;
  instance.kernels = {oracles::random_kernel(T, S, A, rng), oracles::random_kernel(T, S, A, rng)};
  instance.z0 = {oracles::random_initial(S, rng), oracles::random_initial(S, rng)};
  instance.cost_model = CostModel::zeros(2, T, S, A);
  for (auto& table : instance.cost_model.h)
    for (auto& prim : table) prim = CostPrimitive::constant(0.7);
  instance.allow_inadmissible_costs = true;
  CHECK(estimate_curvature(instance, 16, 1) <= 1e-12);
}

TEST_CASE("estimate_curvature of a pure quadratic stays within the squared diameter") {
  // F = 0.5 ||x||^2, so the curvature expression equals ||s - x||^2 exactly
  // and the squared polytope diameter bounds every sample.
  const int T = 1, S = 2, A = 2;
  auto rng = oracles::seeded_rng(269);
  GameInstance instance;
  instance.num_players = 1;
  instance.horizon.T = T;
  instance.S = S;
  instance.A = A;
  instance.kernels = {oracles::random_kernel(T, S, A, rng)};
  instance.z0 = {oracles::random_initial(S, rng)};
  instance.cost_model = CostModel::zeros(1, T, S, A);
  for (auto& prim : instance.cost_model.h[0]) prim = CostPrimitive::linear(0.0, 1.0);

  // Exact diameter over the 16 deterministic-policy extreme points.
  std::vector<StateActionDistribution> corners;
  for (int code = 0; code < 16; ++code) {
    DeterministicPolicy policy(T, S);
    int c = code;
    for (auto& a : policy.action) {
      a = c % A;
      c /= A;
    }
    corners.push_back(retrieve_density(instance.kernels[0], instance.z0[0], policy));
  }
  double diameter = 0.0;
  for (const auto& a : corners)
    for (const auto& b : corners) diameter = std::max(diameter, a.l2_distance(b));

  const double few = estimate_curvature(instance, 8, 7);
  const double many = estimate_curvature(instance, 64, 7);
  CHECK(few > 0.0);
  CHECK(few <= many);  // same seed: the first samples are a prefix
  CHECK(many <= diameter * diameter * (1.0 + 1e-12));
}

TEST_CASE("estimate_curvature is finite and positive on a warehouse instance") {
  warehouse::ScenarioConfig config;
  config.grid.rows = 2;
  config.grid.cols = 3;
  config.horizon = 8;
  config.num_players = 2;
  config.alpha = {0.5, 1.0};
  warehouse::PlayerSpec p1, p2;
  p1.pickup = {1, 2};
  p1.dropoff = {0, 0};
  p2.pickup = {1, 0};
  p2.dropoff = {0, 2};
  config.players = {p1, p2};
  const GameInstance instance = warehouse::build_scenario(config);
  const double c = estimate_curvature(instance, 4, 3);
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);
}

TEST_CASE("extract_certificate pins the terminal multipliers to the terminal costs") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 3, 2, 271);
  auto rng = oracles::seeded_rng(271);
  JointDistribution x;
  for (int i = 0; i < 2; ++i)
    x.x.push_back(oracles::random_feasible_flow(instance.kernels[i], instance.z0[i], rng));
  const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
  const DualCertificate cert = extract_certificate(x, instance);
  const int T = instance.horizon.T;
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < instance.S; ++s) {
      double lo = costs[i].at(T, s, 0);
      for (int a = 1; a < instance.A; ++a) lo = std::min(lo, costs[i].at(T, s, a));
      // The recursive shift vanishes at the last stage: mu_hat[T] is the
      // terminal cost minus its per-state minimum, nu_hat[T] that minimum.
      CHECK(cert.nu_hat[i][static_cast<std::size_t>(T) * instance.S + s] ==
            doctest::Approx(lo).epsilon(1e-14));
      for (int a = 0; a < instance.A; ++a)
        CHECK(cert.mu_hat[i].at(T, s, a) ==
              doctest::Approx(costs[i].at(T, s, a) - lo).epsilon(1e-12));
    }
}

TEST_CASE("certificate residuals are tight at the oracle minimizer") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 277);
  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  const DualCertificate cert = extract_certificate(opt.x, instance);
  CHECK(cert.stationarity_residual <= 1e-6);
  CHECK(cert.dual_feasibility >= -1e-9);
  CHECK(cert.complementary_slackness <= 1e-6);

  const CertificateVerdict verdict = verify_certificate(opt.x, cert, instance, 1e-4);
  CHECK(verdict.pass);
  CHECK(verdict.primal_residual <= 1e-9);
}

TEST_CASE("verify_certificate catches mass parked on a dominated action") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 281);
  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  const DualCertificate cert = extract_certificate(opt.x, instance);

  // Mix a deliberately bad flow into player 0; feasibility survives (the
  // polytope is convex) but the old certificate's slackness breaks.
  const std::vector<StageCosts> costs = player_costs(opt.x, instance.cost_model);
  StageCosts worst(instance.horizon.T, instance.S, instance.A);
  for (std::size_t c = 0; c < worst.size(); ++c) worst.data()[c] = -costs[0].data()[c];
  const ValueIterationResult vi = value_iteration(worst, instance.kernels[0]);
  const StateActionDistribution bad =
      retrieve_density(instance.kernels[0], instance.z0[0], vi.policy);

  JointDistribution mixed = opt.x;
  for (std::size_t c = 0; c < bad.size(); ++c)
    mixed.x[0].data()[c] = 0.7 * opt.x.x[0].data()[c] + 0.3 * bad.data()[c];

  const CertificateVerdict verdict = verify_certificate(mixed, cert, instance, 1e-4);
  CHECK_FALSE(verdict.pass);
  CHECK(verdict.complementary_slackness > 1e-4);
  CHECK(verdict.primal_residual <= 1e-9);
}

TEST_CASE("verify_certificate catches a perturbed state multiplier") {
  const GameInstance instance = oracles::random_game_instance(2, 2, 2, 2, 283);
  const oracles::ProjectedGradientResult opt = oracles::projected_gradient_minimize(instance);
  REQUIRE(opt.converged);
  DualCertificate cert = extract_certificate(opt.x, instance);
  REQUIRE(verify_certificate(opt.x, cert, instance, 1e-4).pass);

  const double delta = 1e-3;
  cert.nu_hat[0][0] += delta;  // stationarity at (0, s=0) breaks by delta
  const CertificateVerdict verdict = verify_certificate(opt.x, cert, instance, 1e-4);
  CHECK_FALSE(verdict.pass);
  CHECK(verdict.stationarity_residual >= 0.5 * delta);
}
