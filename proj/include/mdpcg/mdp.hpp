#pragma once

// Finite-horizon MDP primitives shared by the congestion-game stack.
//
// Conventions used throughout:
//  - Stages run t = 0..T ("stages() == T + 1" decision epochs).
//  - A TransitionKernel stores one S x S x A slice per stage t = 1..T.
//    Entry at(t, s_to, s_from, a) is the probability of arriving in state
//    s_to at stage t after playing action a in state s_from at stage t - 1.
//    Destination-first layout: within a slice, (s_to, s_from, a) is flattened
//    as (s_to * S + s_from) * A + a, so backward sweeps read contiguous
//    (s_from, a) blocks and forward sweeps read contiguous rows per s_to.
//  - State-action tensors (flows, costs, Q tables) are dense (T+1) x S x A
//    arrays flattened as (t * S + s) * A + a.
//  - Argmin ties are always broken toward the lowest action index.

#include <cstdint>
#include <string>
#include <vector>

namespace mdpcg {

struct Horizon {
  int T = 1;  // final stage index; decisions happen at t = 0..T
  int stages() const { return T + 1; }
};

// Dense (T+1) x S x A tensor of doubles. Used both for state-action flows
// (mass of a player occupying (t, s) and playing a) and for stage costs.
// Feasibility of a flow is never enforced by the type; use flow_residual.
class TsaArray {
 public:
  TsaArray() = default;
  TsaArray(int T, int S, int A)
      : T_(T), S_(S), A_(A), v_(static_cast<std::size_t>(T + 1) * S * A, 0.0) {}

  double& at(int t, int s, int a) { return v_[idx(t, s, a)]; }
  double at(int t, int s, int a) const { return v_[idx(t, s, a)]; }

  int horizon() const { return T_; }
  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  std::size_t size() const { return v_.size(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  // Sum over all actions at (t, s).
  double state_sum(int t, int s) const;
  // Sum over all states and actions at stage t.
  double stage_sum(int t) const;
  double l2_norm() const;
  // L2 norm of the difference; shapes must match.
  double l2_distance(const TsaArray& other) const;

  bool same_shape(const TsaArray& o) const {
    return T_ == o.T_ && S_ == o.S_ && A_ == o.A_;
  }

  std::size_t idx(int t, int s, int a) const {
    return (static_cast<std::size_t>(t) * S_ + s) * A_ + a;
  }

 private:
  int T_ = 0, S_ = 0, A_ = 0;
  std::vector<double> v_;
};

using StateActionDistribution = TsaArray;
using StageCosts = TsaArray;

// Per-stage transition kernel, one dense S x S x A slice per t = 1..T.
class TransitionKernel {
 public:
  TransitionKernel() = default;
  TransitionKernel(int T, int S, int A)
      : T_(T), S_(S), A_(A),
        p_(static_cast<std::size_t>(T) * S * S * A, 0.0) {}

  // t runs 1..T.
  double& at(int t, int s_to, int s_from, int a) {
    return p_[slice_offset(t) + ((static_cast<std::size_t>(s_to) * S_ + s_from) * A_ + a)];
  }
  double at(int t, int s_to, int s_from, int a) const {
    return p_[slice_offset(t) + ((static_cast<std::size_t>(s_to) * S_ + s_from) * A_ + a)];
  }

  double* stage_data(int t) { return p_.data() + slice_offset(t); }
  const double* stage_data(int t) const { return p_.data() + slice_offset(t); }

  // Copies one S x S x A slice (same layout as a stage) into every t = 1..T.
  void fill_stationary(const std::vector<double>& stage_slice);

  int horizon() const { return T_; }
  int num_states() const { return S_; }
  int num_actions() const { return A_; }

  // Kernel whose single action keeps every state in place (or any action,
  // if A > 1: all actions self-loop). Convenient in tests.
  static TransitionKernel identity(int T, int S, int A);

 private:
  std::size_t slice_offset(int t) const {
    return static_cast<std::size_t>(t - 1) * S_ * S_ * A_;
  }
  int T_ = 0, S_ = 0, A_ = 0;
  std::vector<double> p_;
};

// Initial state distribution z over s at t = 0.
struct InitialDistribution {
  std::vector<double> z;
  int num_states() const { return static_cast<int>(z.size()); }
  double total() const;
  // Point mass at state s.
  static InitialDistribution point(int S, int s);
};

// One action per (t, s); flattened t * S + s.
struct DeterministicPolicy {
  int T = 0, S = 0;
  std::vector<int> action;
  DeterministicPolicy() = default;
  DeterministicPolicy(int T_, int S_) : T(T_), S(S_), action(static_cast<std::size_t>(T_ + 1) * S_, 0) {}
  int& at(int t, int s) { return action[static_cast<std::size_t>(t) * S + s]; }
  int at(int t, int s) const { return action[static_cast<std::size_t>(t) * S + s]; }
};

struct KernelViolation {
  int t, s, a;
  double column_sum;
};

struct KernelVerdict {
  bool pass = true;
  // Every (t, s, a) whose destination column fails to sum to 1 within tol,
  // or contains a negative entry (column_sum then reports the offender).
  std::vector<KernelViolation> violations;
  std::string summary() const;
};

// Checks that every (t, s_from, a) column is a probability distribution:
// nonnegative entries, sum within tol of 1.
KernelVerdict validate_kernel(const TransitionKernel& kernel, double tol = 1e-12);

struct ValueIterationResult {
  // values[t * S + s]; optimal cost-to-go from (t, s).
  std::vector<double> values;
  DeterministicPolicy policy;
  double value_at(int t, int s, int S) const { return values[static_cast<std::size_t>(t) * S + s]; }
};

// Backward dynamic program:
//   V[T][s]   = min_a c[T][s][a]
//   V[t-1][s] = min_a c[t-1][s][a] + discount * sum_s' P[t][s'][s][a] V[t][s']
// Ties pick the lowest action index. discount = 1 recovers the plain
// finite-horizon recursion.
ValueIterationResult value_iteration(const StageCosts& costs,
                                     const TransitionKernel& kernel,
                                     double discount = 1.0);

// Forward propagation of the initial distribution under a deterministic
// policy:
//   d[0][s][pi(0,s)] = z[s]
//   d[t][s][pi(t,s)] = sum_{s',a} P[t][s][s'][a] d[t-1][s'][a]
// The result is an extreme point of the feasible flow polytope: at most one
// action carries mass per (t, s).
StateActionDistribution retrieve_density(const TransitionKernel& kernel,
                                         const InitialDistribution& z,
                                         const DeterministicPolicy& policy);

// Same forward propagation under the uniform stochastic policy: mass at each
// (t, s) splits evenly over all actions. Default starting iterate for the
// equilibrium solver.
StateActionDistribution uniform_policy_flow(const TransitionKernel& kernel,
                                            const InitialDistribution& z);

// Max-norm violation of the linear flow constraints:
//   sum_a x[0][s][a] = z[s]
//   sum_a x[t][s][a] = sum_{s',a} P[t][s][s'][a] x[t-1][s'][a]   (t = 1..T)
// plus any negativity max(0, -min_entry). Zero (up to roundoff) iff x is a
// feasible flow for (kernel, z).
double flow_residual(const StateActionDistribution& x,
                     const TransitionKernel& kernel,
                     const InitialDistribution& z);

}  // namespace mdpcg
