#include "lceme/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

constexpr char kTrajectoryHeader[] =
    "scenario,seed,round,client,e,D,gamma,train_loss,test_loss,accuracy";
constexpr char kSettlementHeader[] =
    "seed,client,reward,payoff,payoff_hat,server_payoff,bound";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    return std::stod(s);
  } catch (...) {
    throw IoError("bad numeric field '" + s + "' in " + path);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows) {
  if (rows.empty()) throw IoError("write_trajectory_csv: no rows to emit");
  std::ofstream out = open_out(path);
  out << kTrajectoryHeader << '\n';
  for (const TrajectoryRow& r : rows) {
    out << r.scenario << ',' << r.seed << ',' << r.round << ',' << r.client << ','
        << r.effort << ',' << r.batch << ',' << format_double(r.gamma) << ','
        << format_double(r.train_loss) << ',' << format_double(r.test_loss) << ','
        << format_double(r.accuracy) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_settlement_csv(const std::string& path,
                          const std::vector<SettlementRow>& rows) {
  if (rows.empty()) throw IoError("write_settlement_csv: no rows to emit");
  std::ofstream out = open_out(path);
  out << kSettlementHeader << '\n';
  for (const SettlementRow& r : rows) {
    out << r.seed << ',' << r.client << ',' << format_double(r.reward) << ','
        << format_double(r.payoff) << ',' << format_double(r.payoff_hat) << ','
        << format_double(r.server_payoff) << ',' << format_double(r.bound) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader)
    throw IoError("unexpected trajectory header in " + path);
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_row(line);
    if (f.size() != 10) throw IoError("malformed trajectory row in " + path);
    TrajectoryRow r;
    r.scenario = f[0];
    r.seed = std::stoull(f[1]);
    r.round = std::stoi(f[2]);
    r.client = std::stoi(f[3]);
    r.effort = std::stoi(f[4]);
    r.batch = std::stoi(f[5]);
    r.gamma = parse_double(f[6], path);
    r.train_loss = parse_double(f[7], path);
    r.test_loss = parse_double(f[8], path);
    r.accuracy = parse_double(f[9], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SettlementRow> read_settlement_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSettlementHeader)
    throw IoError("unexpected settlement header in " + path);
  std::vector<SettlementRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_row(line);
    if (f.size() != 7) throw IoError("malformed settlement row in " + path);
    SettlementRow r;
    r.seed = std::stoull(f[0]);
    r.client = std::stoi(f[1]);
    r.reward = parse_double(f[2], path);
    r.payoff = parse_double(f[3], path);
    r.payoff_hat = parse_double(f[4], path);
    r.server_payoff = parse_double(f[5], path);
    r.bound = parse_double(f[6], path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lceme
