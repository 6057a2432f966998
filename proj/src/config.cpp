#include "mdpcg/config.hpp"

#include <array>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mdpcg::io {
namespace {

using nlohmann::json;

// Carries the file path so every diagnostic names the file and the dotted
// field that failed.
struct Parser {
  std::string path;

  [[noreturn]] void fail(const std::string& message) const {
    throw std::runtime_error(path + ": " + message);
  }

  const json* find(const json& node, const char* key) const {
    if (!node.is_object()) return nullptr;
    auto it = node.find(key);
    return it == node.end() ? nullptr : &*it;
  }

  const json& require(const json& node, const char* key, const std::string& ctx) const {
    const json* v = find(node, key);
    if (!v) fail(ctx + ": missing required field '" + key + "'");
    return *v;
  }

  void check_keys(const json& node, std::initializer_list<const char*> allowed,
                  const std::string& ctx) const {
    if (!node.is_object()) fail(ctx + ": expected a JSON object");
    for (auto it = node.begin(); it != node.end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) {
          known = true;
          break;
        }
      if (!known) {
        std::string names;
        for (const char* k : allowed) names += std::string(names.empty() ? "" : ", ") + k;
        fail(ctx + ": unknown field '" + it.key() + "' (known fields: " + names + ")");
      }
    }
  }

  double as_double(const json& v, const std::string& ctx) const {
    if (!v.is_number()) fail(ctx + ": expected a number");
    return v.get<double>();
  }

  int as_int(const json& v, const std::string& ctx) const {
    if (!v.is_number_integer()) fail(ctx + ": expected an integer");
    return v.get<int>();
  }

  std::uint64_t as_u64(const json& v, const std::string& ctx) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(ctx + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool as_bool(const json& v, const std::string& ctx) const {
    if (!v.is_boolean()) fail(ctx + ": expected true or false");
    return v.get<bool>();
  }

  std::string as_string(const json& v, const std::string& ctx) const {
    if (!v.is_string()) fail(ctx + ": expected a string");
    return v.get<std::string>();
  }

  warehouse::Location as_location(const json& v, const std::string& ctx) const {
    if (!v.is_array() || v.size() != 2) fail(ctx + ": expected a two-element array [v, w]");
    return {as_int(v[0], ctx + "[0]"), as_int(v[1], ctx + "[1]")};
  }

  std::vector<double> as_double_array(const json& v, const std::string& ctx) const {
    if (!v.is_array()) fail(ctx + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_double(v[i], ctx + "[" + std::to_string(i) + "]"));
    return out;
  }

  // Optional-field readers: leave the output untouched when the key is absent.
  void read(const json& node, const char* key, const std::string& ctx, double& out) const {
    if (const json* v = find(node, key)) out = as_double(*v, ctx + "." + key);
  }
  void read(const json& node, const char* key, const std::string& ctx, int& out) const {
    if (const json* v = find(node, key)) out = as_int(*v, ctx + "." + key);
  }
  void read(const json& node, const char* key, const std::string& ctx, bool& out) const {
    if (const json* v = find(node, key)) out = as_bool(*v, ctx + "." + key);
  }
  void read(const json& node, const char* key, const std::string& ctx, std::uint64_t& out) const {
    if (const json* v = find(node, key)) out = as_u64(*v, ctx + "." + key);
  }
  void read(const json& node, const char* key, const std::string& ctx, std::string& out) const {
    if (const json* v = find(node, key)) out = as_string(*v, ctx + "." + key);
  }

  CostPrimitive as_primitive(const json& v, const std::string& ctx) const {
    check_keys(v, {"kind", "c"}, ctx);
    const std::string kind = as_string(require(v, "kind", ctx), ctx + ".kind");
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    if (const json* cv = find(v, "c")) {
      if (!cv->is_array() || cv->size() > 4)
        fail(ctx + ".c: expected an array of at most 4 coefficients [c0, c1, c2, c3]");
      for (std::size_t i = 0; i < cv->size(); ++i)
        c[i] = as_double((*cv)[i], ctx + ".c[" + std::to_string(i) + "]");
    }
    try {
      if (kind == "constant") return CostPrimitive::constant(c[0]);
      if (kind == "linear") return CostPrimitive::linear(c[0], c[1]);
      if (kind == "exponential") return CostPrimitive::exponential(c[2], c[3]);
      if (kind == "affine_exponential")
        return CostPrimitive::affine_exponential(c[0], c[1], c[2], c[3]);
    } catch (const std::invalid_argument& e) {
      fail(ctx + ": " + e.what());
    }
    fail(ctx + ".kind: unknown primitive kind '" + kind +
         "' (known: constant, linear, exponential, affine_exponential)");
  }
};

json parse_file(const Parser& p) {
  std::ifstream in(p.path);
  if (!in) p.fail("cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    p.fail(std::string("JSON parse error: ") + e.what());
  }
}

void parse_player(const Parser& p, const json& node, const std::string& ctx,
                  const warehouse::ScenarioConfig& scenario, int index,
                  warehouse::PlayerSpec& out) {
  p.check_keys(node, {"pickup", "dropoff", "lambda", "alpha", "initial_location", "initial_mode"},
               ctx);
  out.pickup = p.as_location(p.require(node, "pickup", ctx), ctx + ".pickup");
  out.dropoff = p.as_location(p.require(node, "dropoff", ctx), ctx + ".dropoff");
  out.lambda = scenario.lambda;
  out.alpha = index < static_cast<int>(scenario.alpha.size()) ? scenario.alpha[index] : 1.0;
  p.read(node, "lambda", ctx, out.lambda);
  p.read(node, "alpha", ctx, out.alpha);
  out.initial_location = out.dropoff;
  if (const json* v = p.find(node, "initial_location"))
    out.initial_location = p.as_location(*v, ctx + ".initial_location");
  if (const json* v = p.find(node, "initial_mode")) {
    const std::string m = p.as_string(*v, ctx + ".initial_mode");
    if (m == "pickup")
      out.initial_mode = warehouse::Mode::Pickup;
    else if (m == "dropoff")
      out.initial_mode = warehouse::Mode::Dropoff;
    else
      p.fail(ctx + ".initial_mode: expected \"pickup\" or \"dropoff\", got \"" + m + "\"");
  }
}

void parse_scenario(const Parser& p, const json& node, RunConfig& cfg) {
  const std::string ctx = "scenario";
  p.check_keys(node,
               {"type", "path", "grid", "q", "horizon", "epsilon", "beta", "dt", "lambda", "alpha",
                "num_players", "gamma", "use_discount", "paper_literal_congestion_sign",
                "arrival_complement", "players"},
               ctx);
  p.read(node, "type", ctx, cfg.scenario_type);
  if (cfg.scenario_type != "warehouse" && cfg.scenario_type != "custom")
    p.fail("scenario.type: expected \"warehouse\" or \"custom\", got \"" + cfg.scenario_type +
           "\"");
  p.read(node, "path", ctx, cfg.custom_game_path);

  warehouse::ScenarioConfig& sc = cfg.scenario;
  if (const json* grid = p.find(node, "grid")) {
    p.check_keys(*grid, {"rows", "cols"}, ctx + ".grid");
    p.read(*grid, "rows", ctx + ".grid", sc.grid.rows);
    p.read(*grid, "cols", ctx + ".grid", sc.grid.cols);
  }
  p.read(node, "q", ctx, sc.q);
  p.read(node, "horizon", ctx, sc.horizon);
  p.read(node, "epsilon", ctx, sc.epsilon);
  p.read(node, "beta", ctx, sc.beta);
  p.read(node, "dt", ctx, sc.dt);
  p.read(node, "lambda", ctx, sc.lambda);
  p.read(node, "gamma", ctx, sc.gamma);
  p.read(node, "use_discount", ctx, sc.use_discount);
  p.read(node, "paper_literal_congestion_sign", ctx, sc.paper_literal_congestion_sign);
  p.read(node, "arrival_complement", ctx, sc.arrival_complement);
  if (const json* v = p.find(node, "alpha")) sc.alpha = p.as_double_array(*v, ctx + ".alpha");
  p.read(node, "num_players", ctx, sc.num_players);
  if (const json* players = p.find(node, "players")) {
    if (!players->is_array()) p.fail(ctx + ".players: expected an array of player objects");
    sc.players.resize(players->size());
    for (std::size_t i = 0; i < players->size(); ++i)
      parse_player(p, (*players)[i], ctx + ".players[" + std::to_string(i) + "]", sc,
                   static_cast<int>(i), sc.players[i]);
    if (!p.find(node, "num_players")) sc.num_players = static_cast<int>(players->size());
  }
}

void parse_solver(const Parser& p, const json& node, SolveOptions& so) {
  const std::string ctx = "solver";
  p.check_keys(node,
               {"max_iterations", "gap_tolerance", "movement_tolerance", "seed", "parallel",
                "sequential_updates"},
               ctx);
  p.read(node, "max_iterations", ctx, so.max_iterations);
  p.read(node, "gap_tolerance", ctx, so.gap_tolerance);
  p.read(node, "movement_tolerance", ctx, so.movement_tolerance);
  p.read(node, "seed", ctx, so.seed);
  p.read(node, "parallel", ctx, so.parallel);
  p.read(node, "sequential_updates", ctx, so.sequential_updates);
  if (so.max_iterations < 1) p.fail("solver.max_iterations: must be >= 1");
  if (so.gap_tolerance < 0.0) p.fail("solver.gap_tolerance: must be >= 0");
  if (so.movement_tolerance < 0.0) p.fail("solver.movement_tolerance: must be >= 0");
}

void parse_rollout(const Parser& p, const json& node, RolloutConfig& ro) {
  const std::string ctx = "rollout";
  p.check_keys(node, {"trials", "seed"}, ctx);
  p.read(node, "trials", ctx, ro.trials);
  p.read(node, "seed", ctx, ro.seed);
  if (ro.trials < 0) p.fail("rollout.trials: must be >= 0");
}

// ----- custom game file ------------------------------------------------

// Reads either a single primitive (broadcast over the whole table) or a
// fully nested array matching the given dimensions.
std::vector<CostPrimitive> parse_primitive_table(const Parser& p, const json& node,
                                                 const std::string& ctx,
                                                 const std::vector<int>& dims) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<CostPrimitive> table;
  table.reserve(total);
  if (node.is_object()) {
    table.assign(total, p.as_primitive(node, ctx));
    return table;
  }
  // Nested arrays: walk depth-first, checking each level's length.
  struct Walker {
    const Parser& p;
    const std::vector<int>& dims;
    std::vector<CostPrimitive>& out;
    void walk(const json& v, const std::string& ctx, std::size_t depth) {
      if (depth == dims.size()) {
        out.push_back(p.as_primitive(v, ctx));
        return;
      }
      if (!v.is_array() || static_cast<int>(v.size()) != dims[depth])
        p.fail(ctx + ": expected an array of length " + std::to_string(dims[depth]));
      for (std::size_t i = 0; i < v.size(); ++i)
        walk(v[i], ctx + "[" + std::to_string(i) + "]", depth + 1);
    }
  };
  Walker{p, dims, table}.walk(node, ctx, 0);
  return table;
}

json primitive_to_json(const CostPrimitive& prim) {
  const char* kind = "constant";
  switch (prim.kind()) {
    case CostPrimitive::Kind::Constant: kind = "constant"; break;
    case CostPrimitive::Kind::Linear: kind = "linear"; break;
    case CostPrimitive::Kind::Exponential: kind = "exponential"; break;
    case CostPrimitive::Kind::AffineExponential: kind = "affine_exponential"; break;
  }
  return json{{"kind", kind}, {"c", {prim.c0(), prim.c1(), prim.c2(), prim.c3()}}};
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  Parser p{path};
  const json root = parse_file(p);
  if (!root.is_object()) p.fail("top level: expected a JSON object");
  p.check_keys(root, {"schema_version", "scenario", "solver", "rollout"}, "top level");
  const int version = p.as_int(p.require(root, "schema_version", "top level"), "schema_version");
  if (version != kConfigSchemaVersion)
    p.fail("schema_version: unsupported version " + std::to_string(version) + " (expected " +
           std::to_string(kConfigSchemaVersion) + ")");

  RunConfig cfg;
  if (const json* v = p.find(root, "scenario")) parse_scenario(p, *v, cfg);
  if (const json* v = p.find(root, "solver")) parse_solver(p, *v, cfg.solver);
  if (const json* v = p.find(root, "rollout")) parse_rollout(p, *v, cfg.rollout);

  if (cfg.scenario_type == "custom") {
    if (cfg.custom_game_path.empty())
      p.fail("scenario.path: required when scenario.type is \"custom\"");
    std::filesystem::path game(cfg.custom_game_path);
    if (game.is_relative())
      cfg.custom_game_path = (std::filesystem::path(path).parent_path() / game).string();
  } else {
    // The discount only affects best responses inside the solver.
    cfg.solver.discount = cfg.scenario.use_discount ? cfg.scenario.gamma : 1.0;
  }
  return cfg;
}

GameInstance build_instance(const RunConfig& config) {
  if (config.scenario_type == "custom") return load_custom_game(config.custom_game_path);
  return warehouse::build_scenario(config.scenario);
}

GameInstance load_custom_game(const std::string& path) {
  Parser p{path};
  const json root = parse_file(p);
  if (!root.is_object()) p.fail("top level: expected a JSON object");
  p.check_keys(root,
               {"schema_version", "num_players", "horizon", "num_states", "num_actions", "alpha",
                "z0", "kernels", "state_group", "costs", "allow_inadmissible_costs"},
               "top level");
  const int version = p.as_int(p.require(root, "schema_version", "top level"), "schema_version");
  if (version != kConfigSchemaVersion)
    p.fail("schema_version: unsupported version " + std::to_string(version));

  GameInstance inst;
  inst.num_players = p.as_int(p.require(root, "num_players", "top level"), "num_players");
  inst.horizon.T = p.as_int(p.require(root, "horizon", "top level"), "horizon");
  inst.S = p.as_int(p.require(root, "num_states", "top level"), "num_states");
  inst.A = p.as_int(p.require(root, "num_actions", "top level"), "num_actions");
  if (inst.num_players < 1) p.fail("num_players: must be >= 1");
  if (inst.horizon.T < 1) p.fail("horizon: must be >= 1");
  if (inst.S < 1 || inst.A < 1) p.fail("num_states and num_actions must be >= 1");
  const int N = inst.num_players, T = inst.horizon.T, S = inst.S, A = inst.A;

  // Kernels: [player][t][s_to][s_from][a], t indexing stages 1..T. A single
  // entry broadcasts to every player.
  const json& kernels = p.require(root, "kernels", "top level");
  if (!kernels.is_array() || (kernels.size() != static_cast<std::size_t>(N) && kernels.size() != 1))
    p.fail("kernels: expected an array with one kernel per player (or a single shared kernel)");
  for (int i = 0; i < N; ++i) {
    const json& kj = kernels[kernels.size() == 1 ? 0 : i];
    const std::string kctx = "kernels[" + std::to_string(kernels.size() == 1 ? 0 : i) + "]";
    TransitionKernel kernel(T, S, A);
    if (!kj.is_array() || static_cast<int>(kj.size()) != T)
      p.fail(kctx + ": expected an array of length horizon = " + std::to_string(T));
    for (int t = 1; t <= T; ++t) {
      const json& tj = kj[t - 1];
      const std::string tctx = kctx + "[" + std::to_string(t - 1) + "]";
      if (!tj.is_array() || static_cast<int>(tj.size()) != S)
        p.fail(tctx + ": expected num_states = " + std::to_string(S) + " destination rows");
      for (int s_to = 0; s_to < S; ++s_to) {
        const json& rj = tj[s_to];
        const std::string rctx = tctx + "[" + std::to_string(s_to) + "]";
        if (!rj.is_array() || static_cast<int>(rj.size()) != S)
          p.fail(rctx + ": expected num_states = " + std::to_string(S) + " source rows");
        for (int s_from = 0; s_from < S; ++s_from) {
          const json& aj = rj[s_from];
          const std::string actx = rctx + "[" + std::to_string(s_from) + "]";
          if (!aj.is_array() || static_cast<int>(aj.size()) != A)
            p.fail(actx + ": expected num_actions = " + std::to_string(A) + " entries");
          for (int a = 0; a < A; ++a)
            kernel.at(t, s_to, s_from, a) =
                p.as_double(aj[a], actx + "[" + std::to_string(a) + "]");
        }
      }
    }
    inst.kernels.push_back(std::move(kernel));
  }

  // z0: one distribution per player, or a single flat array shared by all.
  const json& z0 = p.require(root, "z0", "top level");
  if (!z0.is_array() || z0.empty()) p.fail("z0: expected a non-empty array");
  const bool per_player_z = z0[0].is_array();
  if (per_player_z && z0.size() != static_cast<std::size_t>(N))
    p.fail("z0: expected one initial distribution per player");
  for (int i = 0; i < N; ++i) {
    InitialDistribution zi;
    if (per_player_z)
      zi.z = p.as_double_array(z0[i], "z0[" + std::to_string(i) + "]");
    else
      zi.z = p.as_double_array(z0, "z0");
    if (static_cast<int>(zi.z.size()) != S)
      p.fail("z0: each distribution must have num_states = " + std::to_string(S) + " entries");
    inst.z0.push_back(std::move(zi));
  }

  CostModel model = CostModel::zeros(N, T, S, A);
  if (const json* v = p.find(root, "alpha")) {
    model.alpha.alpha = p.as_double_array(*v, "alpha");
    if (static_cast<int>(model.alpha.alpha.size()) != N)
      p.fail("alpha: expected one impact factor per player");
  }
  if (const json* v = p.find(root, "state_group")) {
    if (!v->is_array() || static_cast<int>(v->size()) != S)
      p.fail("state_group: expected num_states = " + std::to_string(S) + " group ids");
    for (int s = 0; s < S; ++s)
      model.state_group[s] = p.as_int((*v)[s], "state_group[" + std::to_string(s) + "]");
  }
  if (const json* costs = p.find(root, "costs")) {
    p.check_keys(*costs, {"f", "g", "h"}, "costs");
    if (const json* v = p.find(*costs, "f"))
      model.f = parse_primitive_table(p, *v, "costs.f", {T + 1, S});
    if (const json* v = p.find(*costs, "g"))
      model.g = parse_primitive_table(p, *v, "costs.g", {T + 1, S, A});
    if (const json* v = p.find(*costs, "h")) {
      if (!v->is_array() || static_cast<int>(v->size()) != N)
        p.fail("costs.h: expected one table (or single primitive) per player");
      for (int i = 0; i < N; ++i)
        model.h[i] =
            parse_primitive_table(p, (*v)[i], "costs.h[" + std::to_string(i) + "]", {T + 1, S, A});
    }
  }
  inst.cost_model = std::move(model);
  bool allow = false;
  p.read(root, "allow_inadmissible_costs", "top level", allow);
  inst.allow_inadmissible_costs = allow;

  inst.validate();  // full structural check with its own diagnostics
  return inst;
}

void save_custom_game(const std::string& path, const GameInstance& instance) {
  const int N = instance.num_players, T = instance.horizon.T, S = instance.S, A = instance.A;
  json root;
  root["schema_version"] = kConfigSchemaVersion;
  root["num_players"] = N;
  root["horizon"] = T;
  root["num_states"] = S;
  root["num_actions"] = A;
  root["alpha"] = instance.cost_model.alpha.alpha;
  root["state_group"] = instance.cost_model.state_group;
  root["allow_inadmissible_costs"] = instance.allow_inadmissible_costs;

  json z0 = json::array();
  for (const InitialDistribution& z : instance.z0) z0.push_back(z.z);
  root["z0"] = std::move(z0);

  json kernels = json::array();
  for (const TransitionKernel& kernel : instance.kernels) {
    json kj = json::array();
    for (int t = 1; t <= T; ++t) {
      json tj = json::array();
      for (int s_to = 0; s_to < S; ++s_to) {
        json rj = json::array();
        for (int s_from = 0; s_from < S; ++s_from) {
          json aj = json::array();
          for (int a = 0; a < A; ++a) aj.push_back(kernel.at(t, s_to, s_from, a));
          rj.push_back(std::move(aj));
        }
        tj.push_back(std::move(rj));
      }
      kj.push_back(std::move(tj));
    }
    kernels.push_back(std::move(kj));
  }
  root["kernels"] = std::move(kernels);

  const CostModel& m = instance.cost_model;
  json f = json::array();
  for (int t = 0; t <= T; ++t) {
    json row = json::array();
    for (int s = 0; s < S; ++s) row.push_back(primitive_to_json(m.f_at(t, s)));
    f.push_back(std::move(row));
  }
  auto table3 = [&](const std::vector<CostPrimitive>& table) {
    json tj = json::array();
    for (int t = 0; t <= T; ++t) {
      json sj = json::array();
      for (int s = 0; s < S; ++s) {
        json aj = json::array();
        for (int a = 0; a < A; ++a) aj.push_back(primitive_to_json(table[m.tsa(t, s, a)]));
        sj.push_back(std::move(aj));
      }
      tj.push_back(std::move(sj));
    }
    return tj;
  };
  json h = json::array();
  for (int i = 0; i < N; ++i) h.push_back(table3(m.h[i]));
  root["costs"] = json{{"f", std::move(f)}, {"g", table3(m.g)}, {"h", std::move(h)}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << root.dump(1) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for hashing");
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a 64 offset basis
  char buf[4096];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;  // FNV prime
    }
    if (got == 0) break;
  }
  return h;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "schema_version=" << kConfigSchemaVersion << "\n"
      << "tool_version=" << manifest.tool_version << "\n"
      << "stage=" << manifest.stage << "\n"
      << "config_hash=" << manifest.config_hash << "\n"
      << "seed=" << manifest.seed << "\n"
      << "created_utc=" << manifest.created_utc << "\n"
      << "status=" << manifest.status << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open manifest");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ": malformed manifest line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mdpcg::io
