#include "mdpcg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mdpcg {

void GameInstance::validate() const {
  if (num_players <= 0) throw std::invalid_argument("GameInstance: need at least one player");
  if (horizon.T < 1) throw std::invalid_argument("GameInstance: horizon must be >= 1");
  if (S <= 0 || A <= 0) throw std::invalid_argument("GameInstance: S and A must be positive");
  if (static_cast<int>(kernels.size()) != num_players)
    throw std::invalid_argument("GameInstance: kernel count != num_players");
  if (static_cast<int>(z0.size()) != num_players)
    throw std::invalid_argument("GameInstance: z0 count != num_players");

  for (int i = 0; i < num_players; ++i) {
    const auto& k = kernels[i];
    if (k.horizon() != horizon.T || k.num_states() != S || k.num_actions() != A) {
      std::ostringstream os;
      os << "GameInstance: kernel shape mismatch for player " << i;
      throw std::invalid_argument(os.str());
    }
    const KernelVerdict kv = validate_kernel(k);
    if (!kv.pass) {
      std::ostringstream os;
      os << "GameInstance: invalid kernel for player " << i << ": " << kv.summary();
      throw std::invalid_argument(os.str());
    }
    if (z0[i].num_states() != S)
      throw std::invalid_argument("GameInstance: initial distribution size mismatch");
    double neg = 0.0;
    for (double v : z0[i].z) neg = std::min(neg, v);
    if (neg < 0.0 || std::abs(z0[i].total() - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "GameInstance: initial distribution of player " << i << " is not a distribution";
      throw std::invalid_argument(os.str());
    }
  }

  if (cost_model.num_players != num_players || cost_model.T != horizon.T ||
      cost_model.S != S || cost_model.A != A)
    throw std::invalid_argument("GameInstance: cost model shape mismatch");
  cost_model.validate();
  if (!allow_inadmissible_costs) {
    const AdmissibilityVerdict v = check_cost_admissibility(cost_model);
    if (!v.pass)
      throw std::invalid_argument("GameInstance: inadmissible costs (" + v.detail +
                                  "); set allow_inadmissible_costs to override");
  }
}

double fw_gap(const JointDistribution& x, const JointDistribution& b,
              const std::vector<StageCosts>& costs) {
  if (x.num_players() != b.num_players() ||
      static_cast<int>(costs.size()) != x.num_players())
    throw std::invalid_argument("fw_gap: player count mismatch");
  double gap = 0.0;
  for (int i = 0; i < x.num_players(); ++i) {
    const double* xi = x.x[i].data();
    const double* bi = b.x[i].data();
    const double* ci = costs[i].data();
    double acc = 0.0;
    for (std::size_t k = 0; k < x.x[i].size(); ++k) acc += ci[k] * (xi[k] - bi[k]);
    gap += acc;
  }
  return gap;
}

namespace {

StateActionDistribution best_response(const GameInstance& inst, int i,
                                      const StageCosts& frozen, double discount) {
  const ValueIterationResult vi = value_iteration(frozen, inst.kernels[i], discount);
  return retrieve_density(inst.kernels[i], inst.z0[i], vi.policy);
}

}  // namespace

std::pair<JointDistribution, ConvergenceTrace> frank_wolfe(const GameInstance& instance,
                                                           const SolveOptions& options) {
  instance.validate();
  if (options.max_iterations < 1)
    throw std::invalid_argument("frank_wolfe: max_iterations must be >= 1");
  if (!(options.gap_tolerance > 0.0) || !(options.movement_tolerance > 0.0))
    throw std::invalid_argument("frank_wolfe: tolerances must be positive");

  const int N = instance.num_players;
  JointDistribution x;
  x.x.reserve(N);
  for (int i = 0; i < N; ++i)
    x.x.push_back(uniform_policy_flow(instance.kernels[i], instance.z0[i]));

  ConvergenceTrace trace;
  trace.records.reserve(options.max_iterations);
  trace.stop_reason = StopReason::IterationCap;

  JointDistribution b;
  b.x.resize(N);
  for (int k = 1; k <= options.max_iterations; ++k) {
    double gap;
    if (!options.sequential_updates) {
      // All players best-respond to the same frozen flow.
      const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
      if (options.parallel && N > 1) {
        std::vector<std::future<StateActionDistribution>> jobs;
        jobs.reserve(N);
        for (int i = 0; i < N; ++i)
          jobs.push_back(std::async(std::launch::async, best_response, std::cref(instance), i,
                                    std::cref(costs[i]), options.discount));
        for (int i = 0; i < N; ++i) b.x[i] = jobs[i].get();
      } else {
        for (int i = 0; i < N; ++i)
          b.x[i] = best_response(instance, i, costs[i], options.discount);
      }
      gap = fw_gap(x, b, costs);
    } else {
      // Sequential variant: costs re-frozen after each player's update, so
      // later players respond to earlier players' fresh iterates. The gap is
      // accumulated from the same costs each response used.
      gap = 0.0;
      const double step = 2.0 / (k + 1);
      for (int i = 0; i < N; ++i) {
        const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
        b.x[i] = best_response(instance, i, costs[i], options.discount);
        const double* bi = b.x[i].data();
        const double* xi = x.x[i].data();
        const double* ci = costs[i].data();
        double acc = 0.0;
        for (std::size_t m = 0; m < x.x[i].size(); ++m) acc += ci[m] * (xi[m] - bi[m]);
        gap += acc;
        // Fold the step in immediately; movement is recorded below from the
        // pre-iteration snapshot held in b after the swap trick, so keep a
        // copy of the old iterate first.
        std::vector<double> old(xi, xi + x.x[i].size());
        double* xw = x.x[i].data();
        for (std::size_t m = 0; m < x.x[i].size(); ++m)
          xw[m] = (1.0 - step) * xw[m] + step * bi[m];
        // Stash the old iterate into b to reuse the movement computation.
        std::copy(old.begin(), old.end(), b.x[i].data());
      }
    }

    const double step = 2.0 / (k + 1);
    IterationRecord rec;
    rec.k = k;
    rec.fw_gap = gap;
    rec.movement.resize(N);
    rec.norm.resize(N);
    for (int i = 0; i < N; ++i) {
      double* xi = x.x[i].data();
      const double* bi = b.x[i].data();
      double move2 = 0.0, norm2 = 0.0;
      if (!options.sequential_updates) {
        for (std::size_t m = 0; m < x.x[i].size(); ++m) {
          const double nv = (1.0 - step) * xi[m] + step * bi[m];
          const double d = nv - xi[m];
          move2 += d * d;
          norm2 += nv * nv;
          xi[m] = nv;
        }
      } else {
        // x already updated; b holds the pre-iteration iterate.
        for (std::size_t m = 0; m < x.x[i].size(); ++m) {
          const double d = xi[m] - bi[m];
          move2 += d * d;
          norm2 += xi[m] * xi[m];
        }
      }
      rec.movement[i] = std::sqrt(move2);
      rec.norm[i] = std::sqrt(norm2);
    }
    rec.potential = potential(x, instance.cost_model);
    trace.records.push_back(std::move(rec));

    const auto& moved = trace.records.back().movement;
    const double max_move = *std::max_element(moved.begin(), moved.end());
    if (gap <= options.gap_tolerance && max_move <= options.movement_tolerance) {
      trace.stop_reason = StopReason::Tolerances;
      break;
    }
  }
  return {std::move(x), std::move(trace)};
}

double estimate_curvature(const GameInstance& instance, int samples, std::uint64_t seed) {
  instance.validate();
  if (samples < 1) throw std::invalid_argument("estimate_curvature: samples must be >= 1");
  const int N = instance.num_players;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);

  // Random feasible flow: random stochastic policy pushed forward.
  auto random_flow = [&](int i) {
    const TransitionKernel& kernel = instance.kernels[i];
    const int T = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
    StateActionDistribution d(T, S, A);
    std::vector<double> w(A);
    auto draw_row = [&]() {
      double sum = 0.0;
      for (int a = 0; a < A; ++a) {
        w[a] = unif(rng);
        sum += w[a];
      }
      for (int a = 0; a < A; ++a) w[a] /= sum;
    };
    for (int s = 0; s < S; ++s) {
      draw_row();
      for (int a = 0; a < A; ++a) d.at(0, s, a) = instance.z0[i].z[s] * w[a];
    }
    std::vector<double> mass(S);
    for (int t = 1; t <= T; ++t) {
      const std::size_t SA = static_cast<std::size_t>(S) * A;
      const double* slice = kernel.stage_data(t);
      const double* prev = d.data() + d.idx(t - 1, 0, 0);
      for (int s_to = 0; s_to < S; ++s_to) {
        const double* row = slice + static_cast<std::size_t>(s_to) * SA;
        double acc = 0.0;
        for (std::size_t m = 0; m < SA; ++m) acc += row[m] * prev[m];
        mass[s_to] = acc;
      }
      for (int s = 0; s < S; ++s) {
        draw_row();
        for (int a = 0; a < A; ++a) d.at(t, s, a) = mass[s] * w[a];
      }
    }
    return d;
  };

  static const double gammas[] = {1.0, 0.5, 0.25, 0.125, 0.0625};
  double worst = 0.0;
  JointDistribution xj, sj, wj;
  xj.x.resize(N);
  sj.x.resize(N);
  wj.x.resize(N);
  for (int sample = 0; sample < samples; ++sample) {
    for (int i = 0; i < N; ++i) {
      xj.x[i] = random_flow(i);
      sj.x[i] = random_flow(i);
    }
    const double fx = potential(xj, instance.cost_model);
    const std::vector<StageCosts> grad = player_costs(xj, instance.cost_model);
    double lin = 0.0;  // <grad F(x), s - x>
    for (int i = 0; i < N; ++i) {
      const double* gi = grad[i].data();
      const double* si = sj.x[i].data();
      const double* xi = xj.x[i].data();
      for (std::size_t m = 0; m < sj.x[i].size(); ++m) lin += gi[m] * (si[m] - xi[m]);
    }
    for (double gamma : gammas) {
      for (int i = 0; i < N; ++i) {
        wj.x[i] = xj.x[i];
        double* wi = wj.x[i].data();
        const double* si = sj.x[i].data();
        const double* xi = xj.x[i].data();
        for (std::size_t m = 0; m < wj.x[i].size(); ++m) wi[m] = xi[m] + gamma * (si[m] - xi[m]);
      }
      const double fw = potential(wj, instance.cost_model);
      worst = std::max(worst, (2.0 / (gamma * gamma)) * (fw - fx - gamma * lin));
    }
  }
  return worst;
}

DualCertificate extract_certificate(const JointDistribution& x, const GameInstance& instance) {
  if (x.num_players() != instance.num_players)
    throw std::invalid_argument("extract_certificate: player count mismatch");
  const QValues qv = q_values(x, instance.cost_model, instance.kernels);
  const int N = instance.num_players, T = instance.horizon.T, S = instance.S, A = instance.A;

  DualCertificate cert;
  cert.nu_hat.assign(N, std::vector<double>(static_cast<std::size_t>(T + 1) * S, 0.0));
  cert.mu_hat.assign(N, TsaArray(T, S, A));

  for (int i = 0; i < N; ++i) {
    auto& nu = cert.nu_hat[i];
    auto& mu = cert.mu_hat[i];
    for (int t = 0; t <= T; ++t)
      for (int s = 0; s < S; ++s) {
        double m = qv.q[i].at(t, s, 0);
        for (int a = 1; a < A; ++a) m = std::min(m, qv.q[i].at(t, s, a));
        nu[static_cast<std::size_t>(t) * S + s] = m;
        for (int a = 0; a < A; ++a) mu.at(t, s, a) = qv.q[i].at(t, s, a) - m;
      }

    // Recursive shift, walking backward with Delta[T+1] = 0. For Q-derived
    // multipliers every Delta is zero up to roundoff; the shift is what makes
    // arbitrary stationary multipliers comparable to Q-derived ones.
    std::vector<double> delta_next(S, 0.0), delta_here(S, 0.0);
    for (int t = T; t >= 0; --t) {
      for (int s = 0; s < S; ++s) {
        double lam_min = 0.0;
        std::vector<double> lam(A);
        for (int a = 0; a < A; ++a) {
          double shift = 0.0;
          if (t < T)
            for (int s_to = 0; s_to < S; ++s_to)
              shift += instance.kernels[i].at(t + 1, s_to, s, a) * delta_next[s_to];
          lam[a] = mu.at(t, s, a) + shift;
          if (a == 0 || lam[a] < lam_min) lam_min = lam[a];
        }
        delta_here[s] = lam_min;
        for (int a = 0; a < A; ++a) mu.at(t, s, a) = lam[a] - lam_min;
        nu[static_cast<std::size_t>(t) * S + s] += lam_min;
      }
      std::swap(delta_next, delta_here);
    }
  }

  // Residuals against the instance.
  const CertificateVerdict v = verify_certificate(x, cert, instance,
                                               std::numeric_limits<double>::infinity());
  cert.stationarity_residual = v.stationarity_residual;
  cert.dual_feasibility = v.dual_feasibility;
  cert.complementary_slackness = v.complementary_slackness;
  return cert;
}

CertificateVerdict verify_certificate(const JointDistribution& x, const DualCertificate& cert,
                                      const GameInstance& instance, double tol) {
  const int N = instance.num_players, T = instance.horizon.T, S = instance.S, A = instance.A;
  if (x.num_players() != N || static_cast<int>(cert.nu_hat.size()) != N ||
      static_cast<int>(cert.mu_hat.size()) != N)
    throw std::invalid_argument("verify_certificate: player count mismatch");

  CertificateVerdict v;
  for (int i = 0; i < N; ++i)
    v.primal_residual =
        std::max(v.primal_residual, flow_residual(x.x[i], instance.kernels[i], instance.z0[i]));

  const std::vector<StageCosts> costs = player_costs(x, instance.cost_model);
  double min_mu = std::numeric_limits<double>::infinity();
  double comp = 0.0, stat = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& nu = cert.nu_hat[i];
    const auto& mu = cert.mu_hat[i];
    for (int t = 0; t <= T; ++t) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double m = mu.at(t, s, a);
          min_mu = std::min(min_mu, m);
          comp = std::max(comp, std::abs(x.x[i].at(t, s, a) * m));
          double lhs = costs[i].at(t, s, a);
          if (t < T)
            for (int s_to = 0; s_to < S; ++s_to)
              lhs += instance.kernels[i].at(t + 1, s_to, s, a) *
                     nu[static_cast<std::size_t>(t + 1) * S + s_to];
          const double rhs = nu[static_cast<std::size_t>(t) * S + s] + m;
          stat = std::max(stat, std::abs(lhs - rhs));
        }
      }
    }
  }
  v.dual_feasibility = min_mu;
  v.complementary_slackness = comp;
  v.stationarity_residual = stat;
  v.pass = v.primal_residual <= tol && v.dual_feasibility >= -tol &&
           v.complementary_slackness <= tol && v.stationarity_residual <= tol;
  return v;
}

}  // namespace mdpcg
