#pragma once

// CSV artifacts shared by the CLI stages. All numeric fields use 17
// significant digits so written doubles reload bit-faithfully.

#include <string>
#include <vector>

#include "mdpcg/mdp.hpp"
#include "mdpcg/rollout.hpp"
#include "mdpcg/solver.hpp"

namespace mdpcg::io {

// Shortest round-trip-safe decimal form ("%.17g").
std::string format_double(double v);

// distribution CSV: header "t,s,a,mass", one row per coordinate in
// lexicographic (t, s, a) order.
void write_distribution_csv(const std::string& path, const StateActionDistribution& x);

// Reload; dimensions are inferred from the row indices and validated for
// completeness. Throws std::runtime_error on malformed or truncated input.
StateActionDistribution read_distribution_csv(const std::string& path);

// trace CSV: header "k,potential,fw_gap,movement_1..N,norm_1..N".
void write_trace_csv(const std::string& path, const ConvergenceTrace& trace, int num_players);
struct TraceTable {
  int num_players = 0;
  std::vector<IterationRecord> records;
};
TraceTable read_trace_csv(const std::string& path);

// rollout summary CSV: one row per player.
void write_rollout_summary_csv(const std::string& path, const rollout::RolloutReport& report);
rollout::RolloutReport read_rollout_summary_csv(const std::string& path);

// per-stage collision series CSV: header "t,player_1..N".
void write_collision_series_csv(const std::string& path,
                                const std::vector<std::vector<double>>& per_player_per_time);
std::vector<std::vector<double>> read_collision_series_csv(const std::string& path);

}  // namespace mdpcg::io
