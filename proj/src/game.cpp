#include "mdpcg/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mdpcg {

CostModel CostModel::zeros(int num_players, int T, int S, int A) {
  CostModel m;
  m.num_players = num_players;
  m.T = T;
  m.S = S;
  m.A = A;
  m.alpha.alpha.assign(num_players, 1.0);
  m.f.assign(static_cast<std::size_t>(T + 1) * S, CostPrimitive::constant(0.0));
  m.g.assign(static_cast<std::size_t>(T + 1) * S * A, CostPrimitive::constant(0.0));
  m.h.assign(num_players,
             std::vector<CostPrimitive>(static_cast<std::size_t>(T + 1) * S * A,
                                        CostPrimitive::constant(0.0)));
  m.state_group.resize(S);
  for (int s = 0; s < S; ++s) m.state_group[s] = s;
  return m;
}

void CostModel::validate() const {
  const std::size_t ts = static_cast<std::size_t>(T + 1) * S;
  const std::size_t tsa_n = ts * A;
  if (alpha.num_players() != num_players)
    throw std::invalid_argument("CostModel: alpha count != num_players");
  for (double a : alpha.alpha)
    if (!(a > 0.0)) throw std::invalid_argument("CostModel: impact factors must be positive");
  if (f.size() != ts) throw std::invalid_argument("CostModel: f size mismatch");
  if (g.size() != tsa_n) throw std::invalid_argument("CostModel: g size mismatch");
  if (static_cast<int>(h.size()) != num_players)
    throw std::invalid_argument("CostModel: h player count mismatch");
  for (const auto& hi : h)
    if (hi.size() != tsa_n) throw std::invalid_argument("CostModel: h size mismatch");
  if (static_cast<int>(state_group.size()) != S)
    throw std::invalid_argument("CostModel: state_group size mismatch");

  // Group members must agree on f at every stage, otherwise the potential's
  // per-group integral and the per-state cost would drift apart.
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int s2 = s + 1; s2 < S; ++s2) {
        if (state_group[s] != state_group[s2]) continue;
        if (!f_at(t, s).same_parameters(f_at(t, s2))) {
          std::ostringstream os;
          os << "CostModel: states " << s << " and " << s2 << " share congestion group "
             << state_group[s] << " but disagree on f at t=" << t;
          throw std::invalid_argument(os.str());
        }
      }
    }
  }
}

double CostModel::strong_convexity_lower_bound(double mass_bound) const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& hi : h)
    for (const auto& p : hi)
      lo = std::min(lo, std::min(p.derivative(0.0), p.derivative(mass_bound)));
  return lo;
}

TsaArray congestion_distribution(const JointDistribution& x, const ImpactFactors& alpha) {
  if (x.num_players() != alpha.num_players())
    throw std::invalid_argument("congestion_distribution: player count mismatch");
  if (x.x.empty()) throw std::invalid_argument("congestion_distribution: no players");
  TsaArray y(x.x[0].horizon(), x.x[0].num_states(), x.x[0].num_actions());
  for (int i = 0; i < x.num_players(); ++i) {
    if (!x.x[i].same_shape(y))
      throw std::invalid_argument("congestion_distribution: player shape mismatch");
    const double ai = alpha.alpha[i];
    const double* src = x.x[i].data();
    double* dst = y.data();
    for (std::size_t k = 0; k < y.size(); ++k) dst[k] += ai * src[k];
  }
  return y;
}

namespace {

// Grouped congestion argument per (t, group): sum of y over all actions of
// every state in the group.
std::vector<double> group_arguments(const TsaArray& y, const CostModel& model) {
  const int num_groups = 1 + *std::max_element(model.state_group.begin(), model.state_group.end());
  std::vector<double> arg(static_cast<std::size_t>(model.T + 1) * num_groups, 0.0);
  for (int t = 0; t <= model.T; ++t)
    for (int s = 0; s < model.S; ++s)
      arg[static_cast<std::size_t>(t) * num_groups + model.state_group[s]] += y.state_sum(t, s);
  return arg;
}

}  // namespace

std::vector<StageCosts> player_costs(const JointDistribution& x, const CostModel& model) {
  const TsaArray y = congestion_distribution(x, model.alpha);
  const std::vector<double> arg = group_arguments(y, model);
  const int num_groups = static_cast<int>(arg.size()) / (model.T + 1);

  std::vector<StageCosts> costs(model.num_players);
  for (int i = 0; i < model.num_players; ++i) {
    costs[i] = StageCosts(model.T, model.S, model.A);
    const double ai = model.alpha.alpha[i];
    for (int t = 0; t <= model.T; ++t) {
      for (int s = 0; s < model.S; ++s) {
        const double w = arg[static_cast<std::size_t>(t) * num_groups + model.state_group[s]];
        const double fc = model.f_at(t, s).value(w);
        for (int a = 0; a < model.A; ++a) {
          const double c = ai * fc + ai * model.g_at(t, s, a).value(y.at(t, s, a)) +
                           model.h_at(i, t, s, a).value(x.x[i].at(t, s, a));
          if (!std::isfinite(c)) {
            std::ostringstream os;
            os << "player_costs: non-finite cost at player " << i << " t=" << t << " s=" << s
               << " a=" << a;
            throw std::runtime_error(os.str());
          }
          costs[i].at(t, s, a) = c;
        }
      }
    }
  }
  return costs;
}

double potential(const JointDistribution& x, const CostModel& model) {
  const TsaArray y = congestion_distribution(x, model.alpha);
  const std::vector<double> arg = group_arguments(y, model);
  const int num_groups = static_cast<int>(arg.size()) / (model.T + 1);

  double F = 0.0;
  // f: one integral per (t, group); the group's representative state carries
  // the (validated) shared parameters.
  std::vector<int> representative(num_groups, -1);
  for (int s = model.S - 1; s >= 0; --s) representative[model.state_group[s]] = s;
  for (int t = 0; t <= model.T; ++t)
    for (int g = 0; g < num_groups; ++g)
      if (representative[g] >= 0)
        F += model.f_at(t, representative[g]).integral(arg[static_cast<std::size_t>(t) * num_groups + g]);

  for (int t = 0; t <= model.T; ++t)
    for (int s = 0; s < model.S; ++s)
      for (int a = 0; a < model.A; ++a)
        F += model.g_at(t, s, a).integral(y.at(t, s, a));

  for (int i = 0; i < model.num_players; ++i)
    for (int t = 0; t <= model.T; ++t)
      for (int s = 0; s < model.S; ++s)
        for (int a = 0; a < model.A; ++a)
          F += model.h_at(i, t, s, a).integral(x.x[i].at(t, s, a));

  if (!std::isfinite(F)) throw std::runtime_error("potential: non-finite value");
  return F;
}

QValues q_values(const JointDistribution& x, const CostModel& model,
                 const std::vector<TransitionKernel>& kernels) {
  if (static_cast<int>(kernels.size()) != model.num_players)
    throw std::invalid_argument("q_values: kernel count mismatch");
  const std::vector<StageCosts> costs = player_costs(x, model);
  const int T = model.T, S = model.S, A = model.A;
  const std::size_t SA = static_cast<std::size_t>(S) * A;

  QValues out;
  out.q.resize(model.num_players);
  std::vector<double> best(S);
  std::vector<double> cont(SA);
  for (int i = 0; i < model.num_players; ++i) {
    const TransitionKernel& kernel = kernels[i];
    if (kernel.horizon() != T || kernel.num_states() != S || kernel.num_actions() != A)
      throw std::invalid_argument("q_values: kernel shape mismatch");
    TsaArray q(T, S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) q.at(T, s, a) = costs[i].at(T, s, a);

    for (int t = T; t >= 1; --t) {
      for (int s = 0; s < S; ++s) {
        double m = q.at(t, s, 0);
        for (int a = 1; a < A; ++a) m = std::min(m, q.at(t, s, a));
        best[s] = m;
      }
      std::fill(cont.begin(), cont.end(), 0.0);
      const double* slice = kernel.stage_data(t);
      for (int s_to = 0; s_to < S; ++s_to) {
        const double v = best[s_to];
        if (v == 0.0) continue;
        const double* row = slice + static_cast<std::size_t>(s_to) * SA;
        for (std::size_t k = 0; k < SA; ++k) cont[k] += row[k] * v;
      }
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          q.at(t - 1, s, a) = costs[i].at(t - 1, s, a) + cont[static_cast<std::size_t>(s) * A + a];
    }
    out.q[i] = std::move(q);
  }
  return out;
}

NashGap nash_gap(const JointDistribution& x, const CostModel& model,
                 const std::vector<TransitionKernel>& kernels, double support_threshold) {
  const QValues qv = q_values(x, model, kernels);
  NashGap r;
  r.per_player.assign(model.num_players, 0.0);
  for (int i = 0; i < model.num_players; ++i) {
    double gi = 0.0;
    for (int t = 0; t <= model.T; ++t) {
      for (int s = 0; s < model.S; ++s) {
        double m = qv.q[i].at(t, s, 0);
        for (int a = 1; a < model.A; ++a) m = std::min(m, qv.q[i].at(t, s, a));
        for (int a = 0; a < model.A; ++a)
          if (x.x[i].at(t, s, a) > support_threshold)
            gi = std::max(gi, qv.q[i].at(t, s, a) - m);
      }
    }
    r.per_player[i] = gi;
    r.gap = std::max(r.gap, gi);
  }
  return r;
}

AdmissibilityVerdict check_cost_admissibility(const CostModel& model) {
  AdmissibilityVerdict v;
  std::ostringstream os;
  auto flag = [&](const char* what, int t, int s, int a) {
    if (!v.pass) return;  // report the first offender only
    v.pass = false;
    os << what << " at t=" << t << " s=" << s;
    if (a >= 0) os << " a=" << a;
    v.detail = os.str();
  };
  for (int t = 0; t <= model.T && v.pass; ++t)
    for (int s = 0; s < model.S && v.pass; ++s)
      if (!model.f_at(t, s).non_decreasing()) flag("f not non-decreasing", t, s, -1);
  for (int t = 0; t <= model.T && v.pass; ++t)
    for (int s = 0; s < model.S && v.pass; ++s)
      for (int a = 0; a < model.A && v.pass; ++a)
        if (!model.g_at(t, s, a).non_decreasing()) flag("g not non-decreasing", t, s, a);
  for (int i = 0; i < model.num_players && v.pass; ++i)
    for (int t = 0; t <= model.T && v.pass; ++t)
      for (int s = 0; s < model.S && v.pass; ++s)
        for (int a = 0; a < model.A && v.pass; ++a)
          if (!model.h_at(i, t, s, a).strictly_increasing()) {
            std::ostringstream os2;
            os2 << "h not strictly increasing at player " << i << " t=" << t << " s=" << s
                << " a=" << a;
            v.pass = false;
            v.detail = os2.str();
          }
  return v;
}

SymmetryVerdict check_jacobian_symmetry(const JointDistribution& x, const CostVectorFn& costs,
                                        int probes, std::uint64_t seed) {
  const int N = x.num_players();
  const int T = x.x[0].horizon(), S = x.x[0].num_states(), A = x.x[0].num_actions();
  const std::size_t n_per_player = x.x[0].size();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_player(0, N - 1);
  std::uniform_int_distribution<std::size_t> pick_coord(0, n_per_player - 1);

  const double delta = 1e-6;
  auto cost_entry = [&](const JointDistribution& at, int i, std::size_t k) {
    return costs(at)[i].data()[k];
  };
  // d l^i_k / d x^j_m by central differences.
  auto jac = [&](int i, std::size_t k, int j, std::size_t m) {
    JointDistribution xp = x, xm = x;
    xp.x[j].data()[m] += delta;
    xm.x[j].data()[m] -= delta;
    return (cost_entry(xp, i, k) - cost_entry(xm, i, k)) / (2.0 * delta);
  };

  SymmetryVerdict v;
  for (int p = 0; p < probes; ++p) {
    const int i = pick_player(rng), j = pick_player(rng);
    const std::size_t k = pick_coord(rng), m = pick_coord(rng);
    const double d1 = jac(i, k, j, m);
    const double d2 = jac(j, m, i, k);
    const double scale = std::max({std::abs(d1), std::abs(d2), 1e-8});
    const double rel = std::abs(d1 - d2) / scale;
    v.worst_asymmetry = std::max(v.worst_asymmetry, rel);
    if (rel > 1e-5) v.symmetric = false;
  }

  // Directional curvature spot check: d^T (grad xi) d > 0 along random unit
  // directions, estimated from the cost vector itself.
  std::normal_distribution<double> gauss(0.0, 1.0);
  double min_curv = std::numeric_limits<double>::infinity();
  const int curvature_probes = std::max(1, probes / 4);
  for (int p = 0; p < curvature_probes; ++p) {
    std::vector<std::vector<double>> dir(N, std::vector<double>(n_per_player));
    double norm = 0.0;
    for (auto& di : dir)
      for (auto& u : di) {
        u = gauss(rng);
        norm += u * u;
      }
    norm = std::sqrt(norm);
    JointDistribution xp = x, xm = x;
    for (int i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n_per_player; ++k) {
        const double step = delta * dir[i][k] / norm;
        xp.x[i].data()[k] += step;
        xm.x[i].data()[k] -= step;
      }
    const auto cp = costs(xp), cm = costs(xm);
    double curv = 0.0;
    for (int i = 0; i < N; ++i)
      for (std::size_t k = 0; k < n_per_player; ++k)
        curv += (cp[i].data()[k] - cm[i].data()[k]) / (2.0 * delta) * (dir[i][k] / norm);
    min_curv = std::min(min_curv, curv);
  }
  v.min_curvature = min_curv;
  v.positive_curvature = min_curv > 0.0;
  if (!v.symmetric || !v.positive_curvature) {
    std::ostringstream os;
    os << "worst relative asymmetry " << v.worst_asymmetry << ", min directional curvature "
       << v.min_curvature;
    v.detail = os.str();
  }
  (void)T;
  (void)S;
  (void)A;
  return v;
}

SymmetryVerdict check_jacobian_symmetry(const JointDistribution& x, const CostModel& model,
                                        int probes, std::uint64_t seed) {
  return check_jacobian_symmetry(
      x, [&model](const JointDistribution& at) { return player_costs(at, model); }, probes, seed);
}

}  // namespace mdpcg
