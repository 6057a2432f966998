#include "mdpcg/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mdpcg {

double TsaArray::state_sum(int t, int s) const {
  const double* row = v_.data() + idx(t, s, 0);
  double acc = 0.0;
  for (int a = 0; a < A_; ++a) acc += row[a];
  return acc;
}

double TsaArray::stage_sum(int t) const {
  const double* row = v_.data() + idx(t, 0, 0);
  double acc = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(S_) * A_; ++k) acc += row[k];
  return acc;
}

double TsaArray::l2_norm() const {
  double acc = 0.0;
  for (double v : v_) acc += v * v;
  return std::sqrt(acc);
}

double TsaArray::l2_distance(const TsaArray& other) const {
  if (!same_shape(other)) throw std::invalid_argument("TsaArray::l2_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < v_.size(); ++k) {
    const double d = v_[k] - other.v_[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

void TransitionKernel::fill_stationary(const std::vector<double>& stage_slice) {
  const std::size_t n = static_cast<std::size_t>(S_) * S_ * A_;
  if (stage_slice.size() != n)
    throw std::invalid_argument("fill_stationary: slice size does not match S*S*A");
  for (int t = 1; t <= T_; ++t)
    std::copy(stage_slice.begin(), stage_slice.end(), p_.begin() + slice_offset(t));
}

TransitionKernel TransitionKernel::identity(int T, int S, int A) {
  TransitionKernel k(T, S, A);
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) k.at(t, s, s, a) = 1.0;
  return k;
}

double InitialDistribution::total() const {
  double acc = 0.0;
  for (double v : z) acc += v;
  return acc;
}

InitialDistribution InitialDistribution::point(int S, int s) {
  InitialDistribution d;
  d.z.assign(S, 0.0);
  d.z[s] = 1.0;
  return d;
}

std::string KernelVerdict::summary() const {
  if (pass) return "kernel ok";
  std::ostringstream os;
  os << violations.size() << " bad column(s):";
  for (std::size_t i = 0; i < violations.size() && i < 8; ++i) {
    const auto& v = violations[i];
    os << " (t=" << v.t << ",s=" << v.s << ",a=" << v.a << ",sum=" << v.column_sum << ")";
  }
  if (violations.size() > 8) os << " ...";
  return os.str();
}

KernelVerdict validate_kernel(const TransitionKernel& kernel, double tol) {
  KernelVerdict verdict;
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  for (int t = 1; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        bool negative = false;
        for (int s_to = 0; s_to < S; ++s_to) {
          const double p = kernel.at(t, s_to, s, a);
          if (p < 0.0) negative = true;
          sum += p;
        }
        if (negative || std::abs(sum - 1.0) > tol)
          verdict.violations.push_back({t, s, a, sum});
      }
    }
  }
  verdict.pass = verdict.violations.empty();
  return verdict;
}

ValueIterationResult value_iteration(const StageCosts& costs,
                                     const TransitionKernel& kernel,
                                     double discount) {
  const int T = costs.horizon(), S = costs.num_states(), A = costs.num_actions();
  if (kernel.horizon() != T || kernel.num_states() != S || kernel.num_actions() != A)
    throw std::invalid_argument("value_iteration: cost/kernel shape mismatch");

  ValueIterationResult r;
  r.values.assign(static_cast<std::size_t>(T + 1) * S, 0.0);
  r.policy = DeterministicPolicy(T, S);

  // Terminal stage: no continuation.
  for (int s = 0; s < S; ++s) {
    double best = costs.at(T, s, 0);
    int best_a = 0;
    for (int a = 1; a < A; ++a) {
      const double c = costs.at(T, s, a);
      if (c < best) { best = c; best_a = a; }
    }
    r.values[static_cast<std::size_t>(T) * S + s] = best;
    r.policy.at(T, s) = best_a;
  }

  const std::size_t SA = static_cast<std::size_t>(S) * A;
  std::vector<double> cont(SA);  // expected continuation per (s_from, a)
  for (int t = T; t >= 1; --t) {
    std::fill(cont.begin(), cont.end(), 0.0);
    const double* slice = kernel.stage_data(t);
    const double* vnext = r.values.data() + static_cast<std::size_t>(t) * S;
    for (int s_to = 0; s_to < S; ++s_to) {
      const double v = vnext[s_to];
      if (v == 0.0) continue;
      const double* row = slice + static_cast<std::size_t>(s_to) * SA;
      for (std::size_t k = 0; k < SA; ++k) cont[k] += row[k] * v;
    }
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const double q = costs.at(t - 1, s, a) + discount * cont[static_cast<std::size_t>(s) * A + a];
        if (a == 0 || q < best) { best = q; best_a = a; }
      }
      r.values[static_cast<std::size_t>(t - 1) * S + s] = best;
      r.policy.at(t - 1, s) = best_a;
    }
  }
  return r;
}

namespace {

// Shared forward pass: next[s] = sum_{s',a} P[t][s][s'][a] * prev[s'][a],
// where prev is the dense SA flow of stage t - 1.
void propagate_stage(const TransitionKernel& kernel, int t,
                     const double* prev_flow, double* next_state_mass) {
  const int S = kernel.num_states(), A = kernel.num_actions();
  const std::size_t SA = static_cast<std::size_t>(S) * A;
  const double* slice = kernel.stage_data(t);
  for (int s_to = 0; s_to < S; ++s_to) {
    const double* row = slice + static_cast<std::size_t>(s_to) * SA;
    double acc = 0.0;
    for (std::size_t k = 0; k < SA; ++k) acc += row[k] * prev_flow[k];
    next_state_mass[s_to] = acc;
  }
}

}  // namespace

StateActionDistribution retrieve_density(const TransitionKernel& kernel,
                                         const InitialDistribution& z,
                                         const DeterministicPolicy& policy) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  if (z.num_states() != S) throw std::invalid_argument("retrieve_density: z size mismatch");
  if (policy.T != T || policy.S != S)
    throw std::invalid_argument("retrieve_density: policy shape mismatch");

  StateActionDistribution d(T, S, A);
  for (int s = 0; s < S; ++s) d.at(0, s, policy.at(0, s)) = z.z[s];

  std::vector<double> mass(S);
  for (int t = 1; t <= T; ++t) {
    propagate_stage(kernel, t, d.data() + d.idx(t - 1, 0, 0), mass.data());
    for (int s = 0; s < S; ++s) d.at(t, s, policy.at(t, s)) = mass[s];
  }
  return d;
}

StateActionDistribution uniform_policy_flow(const TransitionKernel& kernel,
                                            const InitialDistribution& z) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  if (z.num_states() != S) throw std::invalid_argument("uniform_policy_flow: z size mismatch");

  StateActionDistribution d(T, S, A);
  const double inv_a = 1.0 / A;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) d.at(0, s, a) = z.z[s] * inv_a;

  std::vector<double> mass(S);
  for (int t = 1; t <= T; ++t) {
    propagate_stage(kernel, t, d.data() + d.idx(t - 1, 0, 0), mass.data());
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) d.at(t, s, a) = mass[s] * inv_a;
  }
  return d;
}

double flow_residual(const StateActionDistribution& x,
                     const TransitionKernel& kernel,
                     const InitialDistribution& z) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  if (x.horizon() != T || x.num_states() != S || x.num_actions() != A)
    throw std::invalid_argument("flow_residual: flow/kernel shape mismatch");
  if (z.num_states() != S) throw std::invalid_argument("flow_residual: z size mismatch");

  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    worst = std::max(worst, -x.data()[k]);

  for (int s = 0; s < S; ++s)
    worst = std::max(worst, std::abs(x.state_sum(0, s) - z.z[s]));

  std::vector<double> mass(S);
  for (int t = 1; t <= T; ++t) {
    propagate_stage(kernel, t, x.data() + x.idx(t - 1, 0, 0), mass.data());
    for (int s = 0; s < S; ++s)
      worst = std::max(worst, std::abs(x.state_sum(t, s) - mass[s]));
  }
  return worst;
}

}  // namespace mdpcg
