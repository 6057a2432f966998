#pragma once

// Equilibrium computation via Frank-Wolfe on the potential function, plus the
// dual (KKT) certificate that witnesses an equilibrium independently of the
// solve path.
//
// One iteration k = 1, 2, ...:
//   1. freeze each player's stage costs at the current joint flow,
//   2. best-respond per player with value iteration + density retrieval
//      (all players against the same frozen flow by default; an optional
//      sequential mode re-freezes after each player),
//   3. step x^{i,k} = (1 - 2/(k+1)) x^{i,k-1} + (2/(k+1)) b^i.
// The first step has size 1, so the starting flow only seeds the first set
// of frozen costs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdpcg/game.hpp"
#include "mdpcg/mdp.hpp"

namespace mdpcg {

struct GameInstance {
  int num_players = 0;
  Horizon horizon;
  int S = 0, A = 0;
  std::vector<TransitionKernel> kernels;  // one per player
  std::vector<InitialDistribution> z0;    // one per player
  CostModel cost_model;
  // Admissibility (strictly increasing h, non-decreasing f and g) is required
  // unless explicitly waived; without it the equilibrium need not be unique.
  bool allow_inadmissible_costs = false;

  // Throws std::invalid_argument on any structural defect: shape mismatches,
  // invalid kernels, initial distributions not summing to 1, inadmissible
  // costs (unless waived).
  void validate() const;
};

struct SolveOptions {
  int max_iterations = 100;
  // The solve stops early only when BOTH thresholds are met in one iteration:
  // FW gap at or below gap_tolerance and every player's movement at or below
  // movement_tolerance. Otherwise it runs to max_iterations.
  double gap_tolerance = 1e-8;
  double movement_tolerance = 1e-10;
  std::uint64_t seed = 0;            // reserved for sampling (curvature etc.)
  bool parallel = false;             // best-respond players on worker threads
  bool sequential_updates = false;   // re-freeze costs after each player (in-order)
  double discount = 1.0;             // value-iteration discount for best responses
};

enum class StopReason { Tolerances, IterationCap };

struct IterationRecord {
  int k = 0;              // 1-based update count
  double potential = 0;   // F(x^k), after the update
  double fw_gap = 0;      // sum_i <l^i(x^{k-1}), x^{i,k-1} - b^i>, before the update
  std::vector<double> movement;  // ||x^{i,k} - x^{i,k-1}||_2 per player
  std::vector<double> norm;      // ||x^{i,k}||_2 per player
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::IterationCap;
  bool converged() const { return stop_reason != StopReason::IterationCap; }
};

std::pair<JointDistribution, ConvergenceTrace> frank_wolfe(const GameInstance& instance,
                                                           const SolveOptions& options);

// Frank-Wolfe duality gap at x against candidate best responses b under the
// given frozen costs: sum_i <costs^i, x^i - b^i>. Nonnegative when each b^i
// minimizes the frozen linear cost, zero exactly at an equilibrium.
double fw_gap(const JointDistribution& x, const JointDistribution& b,
              const std::vector<StageCosts>& costs);

// Sampled curvature constant of the potential over the feasible product
// polytope: max over sampled feasible pairs (x, s) and step sizes gamma of
//   (2 / gamma^2) * (F(x + gamma (s - x)) - F(x) - gamma <grad F(x), s - x>).
// A lower bound on the true constant that tightens as samples grow.
double estimate_curvature(const GameInstance& instance, int samples, std::uint64_t seed);

struct DualCertificate {
  // nu_hat[i]: (T+1) * S state multipliers; mu_hat[i]: (T+1) x S x A
  // nonnegativity multipliers, after the recursive shift.
  std::vector<std::vector<double>> nu_hat;
  std::vector<TsaArray> mu_hat;
  double stationarity_residual = 0;      // max KKT stationarity violation
  double dual_feasibility = 0;           // min entry of mu_hat
  double complementary_slackness = 0;    // max |x * mu_hat|
};

// Builds multipliers from the Q tables at x (nu = min_a Q, mu = Q - nu),
// then applies the recursive dual shift
//   lambda[t][s][a] = mu[t][s][a] + sum_s' P[t+1][s'][s][a] Delta[t+1][s']
//   Delta[t][s]     = min_a lambda[t][s][a]        (Delta[T+1] = 0)
//   mu_hat = lambda - Delta, nu_hat = nu + Delta
// which preserves stationarity and pins min_a mu_hat to zero per (t, s).
DualCertificate extract_certificate(const JointDistribution& x, const GameInstance& instance);

struct CertificateVerdict {
  bool pass = false;
  double primal_residual = 0;         // max player flow_residual
  double dual_feasibility = 0;        // min mu_hat entry
  double complementary_slackness = 0; // max |x * mu_hat|
  double stationarity_residual = 0;   // max stationarity violation
};

// Recomputes all four KKT residuals of (x, certificate) against the instance
// and passes iff each is within tol (dual feasibility: min mu_hat >= -tol).
CertificateVerdict verify_certificate(const JointDistribution& x, const DualCertificate& cert,
                                      const GameInstance& instance, double tol);

// Convenience bundle produced by a full solve-and-certify pass.
struct EquilibriumReport {
  JointDistribution x;
  ConvergenceTrace trace;
  NashGap gap;
  DualCertificate certificate;
  double final_potential = 0;
  double curvature_estimate = 0;
};

}  // namespace mdpcg
