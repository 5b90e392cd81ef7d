#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lceme {

// One trajectory line per (scenario variant, seed, round, client).
struct TrajectoryRow {
  std::string scenario;
  std::uint64_t seed = 0;
  int round = 0;
  int client = 0;
  int effort = 0;
  int batch = 0;
  double gamma = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double accuracy = 0.0;  // NaN for regression
};

// One settlement line per (seed, client) (and per variant for sweeps).
struct SettlementRow {
  std::uint64_t seed = 0;
  int client = 0;
  double reward = 0.0;
  double payoff = 0.0;
  double payoff_hat = 0.0;
  double server_payoff = 0.0;
  double bound = 0.0;
};

// Fixed column order, 17-significant-digit floats (doubles round-trip
// exactly through the emitted text). Refuses empty row sets and creates no
// file for them.
void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows);
void write_settlement_csv(const std::string& path,
                          const std::vector<SettlementRow>& rows);

std::string format_double(double v);  // %.17g

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);
std::vector<SettlementRow> read_settlement_csv(const std::string& path);

}  // namespace lceme
