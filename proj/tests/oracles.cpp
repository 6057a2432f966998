#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace oracles {

std::mt19937_64 seeded_rng(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  rng.discard(8);
  return rng;
}

StateActionDistribution flow_from_policy(const TransitionKernel& kernel,
                                         const InitialDistribution& z,
                                         const std::vector<double>& pi) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  StateActionDistribution x(T, S, A);
  std::vector<double> rho(z.z), next(static_cast<std::size_t>(S), 0.0);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        x.at(t, s, a) = rho[s] * pi[(static_cast<std::size_t>(t) * S + s) * A + a];
    if (t == T) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int s_to = 0; s_to < S; ++s_to)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          next[s_to] += kernel.at(t + 1, s_to, s, a) * x.at(t, s, a);
    rho.swap(next);
  }
  return x;
}

double policy_cost(const StageCosts& costs, const TransitionKernel& kernel,
                   const InitialDistribution& z, const DeterministicPolicy& policy,
                   double discount) {
  const int T = kernel.horizon(), S = kernel.num_states();
  std::vector<double> rho(z.z), next(static_cast<std::size_t>(S), 0.0);
  double total = 0.0, weight = 1.0;
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) total += weight * rho[s] * costs.at(t, s, policy.at(t, s));
    if (t == T) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int s_to = 0; s_to < S; ++s_to)
      for (int s = 0; s < S; ++s)
        next[s_to] += kernel.at(t + 1, s_to, s, policy.at(t, s)) * rho[s];
    rho.swap(next);
    weight *= discount;
  }
  return total;
}

EnumerationResult exhaustive_policy_minimum(const StageCosts& costs,
                                            const TransitionKernel& kernel,
                                            const InitialDistribution& z, double discount) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  const std::size_t slots = static_cast<std::size_t>(T + 1) * S;
  double combos = 1.0;
  for (std::size_t i = 0; i < slots; ++i) {
    combos *= A;
    if (combos > 2e7) throw std::invalid_argument("exhaustive_policy_minimum: space too large");
  }
  DeterministicPolicy policy(T, S);
  EnumerationResult best;
  best.best_cost = policy_cost(costs, kernel, z, policy, discount);
  best.best_policy = policy;
  // Odometer over the flattened action table.
  while (true) {
    std::size_t slot = 0;
    while (slot < slots) {
      if (++policy.action[slot] < A) break;
      policy.action[slot] = 0;
      ++slot;
    }
    if (slot == slots) break;
    const double cost = policy_cost(costs, kernel, z, policy, discount);
    if (cost < best.best_cost) {
      best.best_cost = cost;
      best.best_policy = policy;
    }
  }
  return best;
}

TransitionKernel random_kernel(int T, int S, int A, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  TransitionKernel kernel(T, S, A);
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        std::vector<double> col(static_cast<std::size_t>(S));
        for (int s_to = 0; s_to < S; ++s_to) sum += col[s_to] = u(rng);
        for (int s_to = 0; s_to < S; ++s_to) kernel.at(t, s_to, s, a) = col[s_to] / sum;
      }
  return kernel;
}

InitialDistribution random_initial(int S, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  InitialDistribution z;
  z.z.resize(static_cast<std::size_t>(S));
  double sum = 0.0;
  for (double& v : z.z) sum += v = u(rng);
  for (double& v : z.z) v /= sum;
  return z;
}

StageCosts random_costs(int T, int S, int A, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  StageCosts costs(T, S, A);
  for (std::size_t i = 0; i < costs.size(); ++i) costs.data()[i] = u(rng);
  return costs;
}

StateActionDistribution random_feasible_flow(const TransitionKernel& kernel,
                                             const InitialDistribution& z, std::mt19937_64& rng) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> pi(static_cast<std::size_t>(T + 1) * S * A);
  for (int t = 0; t <= T; ++t)
    for (int s = 0; s < S; ++s) {
      double sum = 0.0;
      const std::size_t base = (static_cast<std::size_t>(t) * S + s) * A;
      for (int a = 0; a < A; ++a) sum += pi[base + a] = u(rng);
      for (int a = 0; a < A; ++a) pi[base + a] /= sum;
    }
  return flow_from_policy(kernel, z, pi);
}

GameInstance random_game_instance(int num_players, int T, int S, int A, std::uint64_t seed) {
  std::mt19937_64 rng = seeded_rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  GameInstance inst;
  inst.num_players = num_players;
  inst.horizon.T = T;
  inst.S = S;
  inst.A = A;
  for (int i = 0; i < num_players; ++i) {
    inst.kernels.push_back(random_kernel(T, S, A, rng));
    inst.z0.push_back(random_initial(S, rng));
  }

  CostModel model = CostModel::zeros(num_players, T, S, A);
  for (int i = 0; i < num_players; ++i) model.alpha.alpha[i] = 0.5 + u01(rng);
  for (auto& prim : model.f) {
    if (u01(rng) < 0.5) {
      // gentle exponential congestion, non-decreasing (c2, c3 > 0)
      prim = mdpcg::CostPrimitive::exponential(0.05 + 0.25 * u01(rng), 0.3 + 0.7 * u01(rng));
    } else {
      prim = mdpcg::CostPrimitive::linear(0.0, 0.1 + 0.9 * u01(rng));
    }
  }
  for (auto& prim : model.g)
    prim = mdpcg::CostPrimitive::linear(0.3 * u01(rng), 0.1 + 0.7 * u01(rng));
  for (int i = 0; i < num_players; ++i)
    for (auto& prim : model.h[i])
      prim = mdpcg::CostPrimitive::linear(-1.0 + 2.0 * u01(rng), 0.5 + 1.5 * u01(rng));
  inst.cost_model = std::move(model);
  return inst;
}

namespace {

double primitive_value(const mdpcg::CostPrimitive& p, double w) {
  return p.c0() + p.c1() * w + (p.c2() == 0.0 ? 0.0 : p.c2() * std::exp(p.c3() * w));
}

double primitive_integral(const mdpcg::CostPrimitive& p, double w) {
  double v = p.c0() * w + 0.5 * p.c1() * w * w;
  if (p.c2() != 0.0) v += (p.c2() / p.c3()) * (std::exp(p.c3() * w) - 1.0);
  return v;
}

// Per-stage congestion-group sums of y, plus the representative state (the
// lowest state index of each group) carrying the f parameters.
struct GroupSums {
  std::vector<int> group_of;          // dense reindexed group per state
  std::vector<int> representative;    // state index per dense group
  std::vector<std::vector<double>> w; // [t][group]
};

GroupSums group_sums(const mdpcg::TsaArray& y, const CostModel& model) {
  const int T = model.T, S = model.S, A = model.A;
  GroupSums g;
  g.group_of.resize(static_cast<std::size_t>(S));
  std::vector<int> dense;  // raw group id -> dense index, built by first sight
  std::vector<int> raw_ids;
  for (int s = 0; s < S; ++s) {
    const int raw = model.state_group[s];
    int id = -1;
    for (std::size_t k = 0; k < raw_ids.size(); ++k)
      if (raw_ids[k] == raw) id = static_cast<int>(k);
    if (id < 0) {
      id = static_cast<int>(raw_ids.size());
      raw_ids.push_back(raw);
      g.representative.push_back(s);
    }
    g.group_of[s] = id;
  }
  g.w.assign(static_cast<std::size_t>(T) + 1,
             std::vector<double>(raw_ids.size(), 0.0));
  for (int t = 0; t <= T; ++t)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) g.w[t][g.group_of[s]] += y.at(t, s, a);
  return g;
}

mdpcg::TsaArray weighted_sum(const JointDistribution& x, const CostModel& model) {
  mdpcg::TsaArray y(model.T, model.S, model.A);
  for (int i = 0; i < model.num_players; ++i)
    for (std::size_t k = 0; k < y.size(); ++k)
      y.data()[k] += model.alpha.alpha[i] * x.x[i].data()[k];
  return y;
}

}  // namespace

double direct_potential(const JointDistribution& x, const CostModel& model) {
  const int T = model.T, S = model.S, A = model.A;
  const mdpcg::TsaArray y = weighted_sum(x, model);
  const GroupSums groups = group_sums(y, model);
  double total = 0.0;
  for (int t = 0; t <= T; ++t)
    for (std::size_t gi = 0; gi < groups.representative.size(); ++gi)
      total += primitive_integral(model.f_at(t, groups.representative[gi]), groups.w[t][gi]);
  for (int t = 0; t <= T; ++t)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) total += primitive_integral(model.g_at(t, s, a), y.at(t, s, a));
  for (int i = 0; i < model.num_players; ++i)
    for (int t = 0; t <= T; ++t)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          total += primitive_integral(model.h_at(i, t, s, a), x.x[i].at(t, s, a));
  return total;
}

std::vector<StageCosts> direct_gradient(const JointDistribution& x, const CostModel& model) {
  const int T = model.T, S = model.S, A = model.A;
  const mdpcg::TsaArray y = weighted_sum(x, model);
  const GroupSums groups = group_sums(y, model);
  std::vector<StageCosts> grad(static_cast<std::size_t>(model.num_players),
                               StageCosts(T, S, A));
  for (int i = 0; i < model.num_players; ++i) {
    const double alpha = model.alpha.alpha[i];
    for (int t = 0; t <= T; ++t)
      for (int s = 0; s < S; ++s) {
        const double fw = primitive_value(model.f_at(t, s), groups.w[t][groups.group_of[s]]);
        for (int a = 0; a < A; ++a) {
          grad[i].at(t, s, a) = alpha * fw +
                                alpha * primitive_value(model.g_at(t, s, a), y.at(t, s, a)) +
                                primitive_value(model.h_at(i, t, s, a), x.x[i].at(t, s, a));
        }
      }
  }
  return grad;
}

std::vector<double> central_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& point,
    double step) {
  std::vector<double> grad(point.size());
  std::vector<double> probe = point;
  for (std::size_t j = 0; j < point.size(); ++j) {
    probe[j] = point[j] + step;
    const double hi = f(probe);
    probe[j] = point[j] - step;
    const double lo = f(probe);
    probe[j] = point[j];
    grad[j] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

std::vector<double> solve_linear_system(std::vector<double> a, std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
          std::abs(a[static_cast<std::size_t>(pivot) * n + col]))
        pivot = r;
    if (std::abs(a[static_cast<std::size_t>(pivot) * n + col]) < 1e-14)
      throw std::runtime_error("solve_linear_system: singular matrix");
    if (pivot != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(pivot) * n + c],
                  a[static_cast<std::size_t>(col) * n + c]);
      std::swap(b[pivot], b[col]);
    }
    const double diag = a[static_cast<std::size_t>(col) * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double factor = a[static_cast<std::size_t>(r) * n + col] / diag;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= factor * a[static_cast<std::size_t>(col) * n + c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[static_cast<std::size_t>(r) * n + c] * x[c];
    x[r] = acc / a[static_cast<std::size_t>(r) * n + r];
  }
  return x;
}

FlowPolytopeProjector::FlowPolytopeProjector(const TransitionKernel& kernel,
                                             const InitialDistribution& z) {
  const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  n_ = (T + 1) * S * A;
  m_ = (T + 1) * S;
  c_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
  d_.assign(static_cast<std::size_t>(m_), 0.0);
  auto var = [&](int t, int s, int a) { return (t * S + s) * A + a; };
  auto row = [&](int t, int s) { return t * S + s; };
  for (int s = 0; s < S; ++s) {
    const int r = row(0, s);
    for (int a = 0; a < A; ++a) c_[static_cast<std::size_t>(r) * n_ + var(0, s, a)] = 1.0;
    d_[r] = z.z[s];
  }
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < S; ++s) {
      const int r = row(t, s);
      for (int a = 0; a < A; ++a) c_[static_cast<std::size_t>(r) * n_ + var(t, s, a)] = 1.0;
      for (int sp = 0; sp < S; ++sp)
        for (int a = 0; a < A; ++a)
          c_[static_cast<std::size_t>(r) * n_ + var(t - 1, sp, a)] -= kernel.at(t, s, sp, a);
      d_[r] = 0.0;
    }

  // gram = C C^T, inverted column by column (full row rank: each row is the
  // only one adding +1 over its own stage-t block).
  std::vector<double> gram(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int r1 = 0; r1 < m_; ++r1)
    for (int r2 = 0; r2 < m_; ++r2) {
      double acc = 0.0;
      for (int j = 0; j < n_; ++j)
        acc += c_[static_cast<std::size_t>(r1) * n_ + j] * c_[static_cast<std::size_t>(r2) * n_ + j];
      gram[static_cast<std::size_t>(r1) * m_ + r2] = acc;
    }
  gram_inv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int col = 0; col < m_; ++col) {
    std::vector<double> e(static_cast<std::size_t>(m_), 0.0);
    e[col] = 1.0;
    const std::vector<double> inv_col = solve_linear_system(gram, e, m_);
    for (int r = 0; r < m_; ++r) gram_inv_[static_cast<std::size_t>(r) * m_ + col] = inv_col[r];
  }
}

std::vector<double> FlowPolytopeProjector::project_affine(std::vector<double> x) const {
  std::vector<double> resid(static_cast<std::size_t>(m_), 0.0);
  for (int r = 0; r < m_; ++r) {
    double acc = -d_[r];
    for (int j = 0; j < n_; ++j) acc += c_[static_cast<std::size_t>(r) * n_ + j] * x[j];
    resid[r] = acc;
  }
  std::vector<double> mult(static_cast<std::size_t>(m_), 0.0);
  for (int r = 0; r < m_; ++r) {
    double acc = 0.0;
    for (int k = 0; k < m_; ++k) acc += gram_inv_[static_cast<std::size_t>(r) * m_ + k] * resid[k];
    mult[r] = acc;
  }
  for (int r = 0; r < m_; ++r) {
    const double mr = mult[r];
    if (mr == 0.0) continue;
    for (int j = 0; j < n_; ++j) x[j] -= c_[static_cast<std::size_t>(r) * n_ + j] * mr;
  }
  return x;
}

double FlowPolytopeProjector::constraint_residual(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int r = 0; r < m_; ++r) {
    double acc = -d_[r];
    for (int j = 0; j < n_; ++j) acc += c_[static_cast<std::size_t>(r) * n_ + j] * x[j];
    worst = std::max(worst, std::abs(acc));
  }
  for (int j = 0; j < n_; ++j) worst = std::max(worst, -x[j]);
  return worst;
}

std::vector<double> FlowPolytopeProjector::project(const std::vector<double>& point,
                                                   int max_sweeps, double tol) const {
  // Dykstra with a correction term for the orthant only; corrections for
  // affine sets vanish identically.
  std::vector<double> x = point;
  std::vector<double> correction(x.size(), 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const std::vector<double> y = project_affine(x);
    double drift = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double with_corr = y[j] + correction[j];
      const double clipped = with_corr > 0.0 ? with_corr : 0.0;
      correction[j] = with_corr - clipped;
      drift = std::max(drift, std::abs(clipped - x[j]));
      x[j] = clipped;
    }
    if (drift <= tol && constraint_residual(x) <= 10.0 * tol) return x;
  }
  return x;
}

ProjectedGradientResult projected_gradient_minimize(const GameInstance& instance,
                                                    int max_iterations, double movement_tol) {
  const int N = instance.num_players, T = instance.horizon.T, S = instance.S, A = instance.A;
  std::vector<FlowPolytopeProjector> projectors;
  projectors.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) projectors.emplace_back(instance.kernels[i], instance.z0[i]);

  // Uniform-policy start, via the oracle's own forward pass.
  ProjectedGradientResult result;
  std::vector<double> uniform(static_cast<std::size_t>(T + 1) * S * A, 1.0 / A);
  for (int i = 0; i < N; ++i)
    result.x.x.push_back(flow_from_policy(instance.kernels[i], instance.z0[i], uniform));

  double step = 1.0;
  double current = direct_potential(result.x, instance.cost_model);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const std::vector<StageCosts> grad = direct_gradient(result.x, instance.cost_model);
    JointDistribution candidate;
    double movement = 0.0;
    double value = 0.0;
    // Backtrack until the step decreases the potential.
    for (int attempt = 0; attempt < 60; ++attempt) {
      candidate.x.clear();
      movement = 0.0;
      for (int i = 0; i < N; ++i) {
        std::vector<double> shifted(result.x.x[i].data(),
                                    result.x.x[i].data() + result.x.x[i].size());
        for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] -= step * grad[i].data()[j];
        const std::vector<double> projected = projectors[i].project(shifted);
        StateActionDistribution xi(T, S, A);
        double dist2 = 0.0;
        for (std::size_t j = 0; j < projected.size(); ++j) {
          xi.data()[j] = projected[j];
          const double diff = projected[j] - result.x.x[i].data()[j];
          dist2 += diff * diff;
        }
        movement = std::max(movement, std::sqrt(dist2));
        candidate.x.push_back(std::move(xi));
      }
      value = direct_potential(candidate, instance.cost_model);
      if (value <= current || movement <= movement_tol) break;
      step *= 0.5;
    }
    if (value > current && movement > movement_tol) break;  // line search exhausted
    result.x = std::move(candidate);
    current = value;
    result.iterations = iter;
    if (movement <= movement_tol) {
      result.converged = true;
      break;
    }
    step = std::min(step * 1.3, 8.0);
  }
  result.potential = current;
  return result;
}

}  // namespace oracles
