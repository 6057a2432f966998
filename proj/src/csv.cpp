#include "mdpcg/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mdpcg::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": bad numeric field '" + s + "'");
  }
}

long parse_int(const std::string& s, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": bad integer field '" + s + "'");
  }
}

}  // namespace

void write_distribution_csv(const std::string& path, const StateActionDistribution& x) {
  std::ofstream out = open_out(path);
  out << "t,s,a,mass\n";
  for (int t = 0; t <= x.horizon(); ++t)
    for (int s = 0; s < x.num_states(); ++s)
      for (int a = 0; a < x.num_actions(); ++a)
        out << t << ',' << s << ',' << a << ',' << format_double(x.at(t, s, a)) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

StateActionDistribution read_distribution_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"t", "s", "a", "mass"})
    throw std::runtime_error(path + ": missing 't,s,a,mass' header");

  struct Row {
    int t, s, a;
    double mass;
  };
  std::vector<Row> rows;
  int max_t = -1, max_s = -1, max_a = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected 4 fields, got " + std::to_string(fields.size()));
    Row r;
    r.t = static_cast<int>(parse_int(fields[0], path, line_no));
    r.s = static_cast<int>(parse_int(fields[1], path, line_no));
    r.a = static_cast<int>(parse_int(fields[2], path, line_no));
    r.mass = parse_double(fields[3], path, line_no);
    if (r.t < 0 || r.s < 0 || r.a < 0)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": negative index");
    max_t = std::max(max_t, r.t);
    max_s = std::max(max_s, r.s);
    max_a = std::max(max_a, r.a);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  const std::size_t expected =
      static_cast<std::size_t>(max_t + 1) * (max_s + 1) * (max_a + 1);
  if (rows.size() != expected)
    throw std::runtime_error(path + ": expected " + std::to_string(expected) +
                             " rows for a dense (t,s,a) table, got " + std::to_string(rows.size()));

  StateActionDistribution x(max_t, max_s + 1, max_a + 1);
  std::vector<bool> seen(expected, false);
  for (const Row& r : rows) {
    const std::size_t k = x.idx(r.t, r.s, r.a);
    if (seen[k]) throw std::runtime_error(path + ": duplicate coordinate row");
    seen[k] = true;
    x.at(r.t, r.s, r.a) = r.mass;
  }
  return x;
}

void write_trace_csv(const std::string& path, const ConvergenceTrace& trace, int num_players) {
  std::ofstream out = open_out(path);
  out << "k,potential,fw_gap";
  for (int i = 1; i <= num_players; ++i) out << ",movement_" << i;
  for (int i = 1; i <= num_players; ++i) out << ",norm_" << i;
  out << '\n';
  for (const IterationRecord& rec : trace.records) {
    out << rec.k << ',' << format_double(rec.potential) << ',' << format_double(rec.fw_gap);
    for (double m : rec.movement) out << ',' << format_double(m);
    for (double n : rec.norm) out << ',' << format_double(n);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

TraceTable read_trace_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty trace");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "k" || header[1] != "potential" || header[2] != "fw_gap")
    throw std::runtime_error(path + ": unexpected trace header");
  if ((header.size() - 3) % 2 != 0)
    throw std::runtime_error(path + ": trace header has unpaired player columns");

  TraceTable table;
  table.num_players = static_cast<int>((header.size() - 3) / 2);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": field count");
    IterationRecord rec;
    rec.k = static_cast<int>(parse_int(fields[0], path, line_no));
    rec.potential = parse_double(fields[1], path, line_no);
    rec.fw_gap = parse_double(fields[2], path, line_no);
    for (int i = 0; i < table.num_players; ++i)
      rec.movement.push_back(parse_double(fields[3 + i], path, line_no));
    for (int i = 0; i < table.num_players; ++i)
      rec.norm.push_back(parse_double(fields[3 + table.num_players + i], path, line_no));
    table.records.push_back(std::move(rec));
  }
  return table;
}

void write_rollout_summary_csv(const std::string& path, const rollout::RolloutReport& report) {
  std::ofstream out = open_out(path);
  out << "player,trials,mean_collisions,collisions_per_step,mean_wait,worst_wait,"
         "completed_mean,incomplete_mean\n";
  for (const auto& row : report.rows) {
    out << row.player << ',' << report.trials << ',' << format_double(row.mean_collisions) << ','
        << format_double(row.collisions_per_step) << ',' << format_double(row.mean_wait) << ','
        << format_double(row.worst_wait) << ',' << format_double(row.completed_mean) << ','
        << format_double(row.incomplete_mean) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

rollout::RolloutReport read_rollout_summary_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty summary");
  if (split_csv_line(line).size() != 8)
    throw std::runtime_error(path + ": unexpected summary header");
  rollout::RolloutReport report;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 8)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": field count");
    rollout::RolloutReport::Row row;
    row.player = static_cast<int>(parse_int(fields[0], path, line_no));
    report.trials = static_cast<int>(parse_int(fields[1], path, line_no));
    row.mean_collisions = parse_double(fields[2], path, line_no);
    row.collisions_per_step = parse_double(fields[3], path, line_no);
    row.mean_wait = parse_double(fields[4], path, line_no);
    row.worst_wait = parse_double(fields[5], path, line_no);
    row.completed_mean = parse_double(fields[6], path, line_no);
    row.incomplete_mean = parse_double(fields[7], path, line_no);
    report.rows.push_back(row);
  }
  return report;
}

void write_collision_series_csv(const std::string& path,
                                const std::vector<std::vector<double>>& per_player_per_time) {
  std::ofstream out = open_out(path);
  out << "t";
  for (std::size_t i = 1; i <= per_player_per_time.size(); ++i) out << ",player_" << i;
  out << '\n';
  const std::size_t stages = per_player_per_time.empty() ? 0 : per_player_per_time[0].size();
  for (std::size_t t = 0; t < stages; ++t) {
    out << t;
    for (const auto& series : per_player_per_time) out << ',' << format_double(series[t]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::vector<double>> read_collision_series_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty collision series");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t")
    throw std::runtime_error(path + ": unexpected collision series header");
  const int players = static_cast<int>(header.size()) - 1;
  std::vector<std::vector<double>> series(players);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != players + 1)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": field count");
    for (int i = 0; i < players; ++i)
      series[i].push_back(parse_double(fields[i + 1], path, line_no));
  }
  return series;
}

}  // namespace mdpcg::io
