#pragma once

// Congestion-game layer on top of the MDP primitives.
//
// N players share the state-action space. Player i carries an impact factor
// alpha_i > 0; the congestion distribution is y = sum_i alpha_i x^i. Player
// i's stage cost at (t, s, a) is
//
//   l^i[t][s][a] = alpha_i * f[t][s](sum over the congestion group of s of
//                  all action mass of y at stage t)
//                + alpha_i * g[t][s][a](y[t][s][a])
//                + h^i[t][s][a](x^i[t][s][a])
//
// and the scalar potential F(x) integrates each primitive from 0 so that
// dF / dx^i[t][s][a] = l^i[t][s][a]. Congestion groups let several states
// (e.g. both modes of one physical location) share a single f argument; the
// identity grouping recovers the plain per-state congestion sum.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdpcg/mdp.hpp"

namespace mdpcg {

struct ImpactFactors {
  std::vector<double> alpha;  // one per player, all > 0
  int num_players() const { return static_cast<int>(alpha.size()); }
};

// Scalar congestion primitive c0 + c1*w + c2*exp(c3*w) with a closed-form
// antiderivative. c3 must be nonzero whenever c2 is nonzero.
class CostPrimitive {
 public:
  enum class Kind { Constant, Linear, Exponential, AffineExponential };

  CostPrimitive() : CostPrimitive(Kind::Constant, 0, 0, 0, 0) {}

  static CostPrimitive constant(double c0) { return {Kind::Constant, c0, 0, 0, 0}; }
  static CostPrimitive linear(double c0, double c1) { return {Kind::Linear, c0, c1, 0, 0}; }
  static CostPrimitive exponential(double c2, double c3) { return {Kind::Exponential, 0, 0, c2, c3}; }
  static CostPrimitive affine_exponential(double c0, double c1, double c2, double c3) {
    return {Kind::AffineExponential, c0, c1, c2, c3};
  }

  double value(double w) const {
    double v = c0_ + c1_ * w;
    if (c2_ != 0.0) v += c2_ * std::exp(c3_ * w);
    return v;
  }

  // Integral of value from 0 to w: c0*w + c1*w^2/2 + (c2/c3)*(e^{c3 w} - 1).
  double integral(double w) const {
    double v = c0_ * w + 0.5 * c1_ * w * w;
    if (c2_ != 0.0) v += (c2_ / c3_) * (std::exp(c3_ * w) - 1.0);
    return v;
  }

  double derivative(double w) const {
    double v = c1_;
    if (c2_ != 0.0) v += c2_ * c3_ * std::exp(c3_ * w);
    return v;
  }

  // Monotonicity over all of R, derived from the parameters.
  bool non_decreasing() const { return c1_ >= 0.0 && c2_ * c3_ >= 0.0; }
  bool strictly_increasing() const {
    return non_decreasing() && (c1_ > 0.0 || c2_ * c3_ > 0.0);
  }

  Kind kind() const { return kind_; }
  double c0() const { return c0_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double c3() const { return c3_; }

  bool same_parameters(const CostPrimitive& o) const {
    return c0_ == o.c0_ && c1_ == o.c1_ && c2_ == o.c2_ && c3_ == o.c3_;
  }

 private:
  CostPrimitive(Kind k, double c0, double c1, double c2, double c3)
      : kind_(k), c0_(c0), c1_(c1), c2_(c2), c3_(c3) {
    if (c2_ != 0.0 && c3_ == 0.0)
      throw std::invalid_argument("CostPrimitive: c3 must be nonzero when c2 is nonzero");
  }

  Kind kind_;
  double c0_, c1_, c2_, c3_;
};

// Full cost specification of one game. Plain data; validate() checks shape
// and grouping consistency, check_cost_admissibility checks monotonicity.
struct CostModel {
  int num_players = 0;
  int T = 0, S = 0, A = 0;

  ImpactFactors alpha;
  std::vector<CostPrimitive> f;               // (T+1) * S, argument: grouped y mass
  std::vector<CostPrimitive> g;               // (T+1) * S * A, argument: y[t][s][a]
  std::vector<std::vector<CostPrimitive>> h;  // per player, (T+1) * S * A, argument: x^i[t][s][a]

  // Congestion group id per state. f's argument at (t, s) sums y over every
  // action of every state sharing group id with s. All states in one group
  // must carry identical f parameters at each t. Identity grouping by default.
  std::vector<int> state_group;

  CostPrimitive& f_at(int t, int s) { return f[static_cast<std::size_t>(t) * S + s]; }
  const CostPrimitive& f_at(int t, int s) const { return f[static_cast<std::size_t>(t) * S + s]; }
  CostPrimitive& g_at(int t, int s, int a) { return g[tsa(t, s, a)]; }
  const CostPrimitive& g_at(int t, int s, int a) const { return g[tsa(t, s, a)]; }
  CostPrimitive& h_at(int i, int t, int s, int a) { return h[i][tsa(t, s, a)]; }
  const CostPrimitive& h_at(int i, int t, int s, int a) const { return h[i][tsa(t, s, a)]; }

  std::size_t tsa(int t, int s, int a) const {
    return (static_cast<std::size_t>(t) * S + s) * A + a;
  }

  // All-zero primitives, identity grouping, unit impact factors.
  static CostModel zeros(int num_players, int T, int S, int A);

  // Throws std::invalid_argument on shape mismatch, non-positive alpha, or
  // inconsistent f parameters within a congestion group.
  void validate() const;

  // Lower bound on the curvature h contributes to the potential on flows
  // with entries in [0, mass_bound]: min over players and coordinates of the
  // smallest h' on that interval (h' is monotone for this primitive family,
  // so endpoint evaluation suffices). f and g only add curvature.
  double strong_convexity_lower_bound(double mass_bound = 1.0) const;
};

// Joint state-action flow, one distribution per player.
struct JointDistribution {
  std::vector<StateActionDistribution> x;
  int num_players() const { return static_cast<int>(x.size()); }
};

// Per-player Q tables, shaped like stage costs.
struct QValues {
  std::vector<TsaArray> q;
};

// y = sum_i alpha_i x^i.
TsaArray congestion_distribution(const JointDistribution& x, const ImpactFactors& alpha);

// Player stage costs at the frozen joint flow x. Throws std::runtime_error
// naming the offending (player, t, s, a) if any cost evaluates non-finite.
std::vector<StageCosts> player_costs(const JointDistribution& x, const CostModel& model);

// Potential F(x): per (t, group) integral of f, per (t, s, a) integral of g
// over y, per (i, t, s, a) integral of h over x^i. Each congestion group is
// integrated once.
double potential(const JointDistribution& x, const CostModel& model);

// Backward recursion at frozen x:
//   Q^i[T][s][a]   = l^i[T][s][a]
//   Q^i[t-1][s][a] = l^i[t-1][s][a] + sum_s' P^i[t][s'][s][a] min_a' Q^i[t][s'][a']
QValues q_values(const JointDistribution& x, const CostModel& model,
                 const std::vector<TransitionKernel>& kernels);

struct NashGap {
  double gap = 0.0;                 // max over players
  std::vector<double> per_player;   // same quantity per player
};

// Equilibrium violation: the largest Q-excess (Q minus the state's best Q)
// over coordinates actually used by the flow. Coordinates with mass at or
// below support_threshold are ignored; FW iterates carry numeric dust.
NashGap nash_gap(const JointDistribution& x, const CostModel& model,
                 const std::vector<TransitionKernel>& kernels,
                 double support_threshold = 1e-9);

struct AdmissibilityVerdict {
  bool pass = true;
  std::string detail;  // first offenders, empty when pass
};

// Admissible: every h strictly increasing, every f and g non-decreasing.
// Guarantees a strictly convex potential and a unique equilibrium.
AdmissibilityVerdict check_cost_admissibility(const CostModel& model);

struct SymmetryVerdict {
  bool symmetric = true;
  bool positive_curvature = true;
  double worst_asymmetry = 0.0;  // relative
  double min_curvature = 0.0;
  std::string detail;
};

// Evaluates all players' stage costs at a joint flow; used to probe cost
// structures beyond what CostModel can express.
using CostVectorFn = std::function<std::vector<StageCosts>(const JointDistribution&)>;

// Central-difference probe of the cost Jacobian: randomly sampled entry
// pairs must match their transposes within 1e-5 relative, and random
// directional curvature must be positive. A symmetric Jacobian is what makes
// the game a potential game.
SymmetryVerdict check_jacobian_symmetry(const JointDistribution& x, const CostVectorFn& costs,
                                        int probes, std::uint64_t seed = 0);
SymmetryVerdict check_jacobian_symmetry(const JointDistribution& x, const CostModel& model,
                                        int probes, std::uint64_t seed = 0);

}  // namespace mdpcg
