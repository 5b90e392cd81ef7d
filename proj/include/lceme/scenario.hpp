#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lceme/bound.hpp"
#include "lceme/config.hpp"
#include "lceme/csv_io.hpp"
#include "lceme/labeling.hpp"
#include "lceme/mechanism.hpp"
#include "lceme/synthetic.hpp"

namespace lceme {

// Everything a config determines before any run seed enters: data, resolved
// step size, analytic constants, bound inputs, costs, and the assignment.
// The probe set for sigma_i^2 / G^2 is {w0, w*} plus the per-round global
// models of a pilot truthful run at the config's default batch size.
struct Workbench {
  LossModel model;
  std::vector<Dataset> clean;  // per-client, pre-corruption
  Dataset test_set;
  std::vector<double> weights;
  ConvexityConstants constants;
  double eta = 0.0;
  Vec w0;
  Vec w_star;
  double f_star = 0.0;
  BoundInputs bound;
  CostProfile costs;
  Assignment assignment;
};

Workbench prepare_workbench(const ExperimentConfig& cfg);

// Truthful strategy vector for an assignment (e=1, D=D', gamma=1), with the
// config's per-client overrides applied on top when requested.
std::vector<ClientStrategy> truthful_strategies(const Workbench& wb);
std::vector<ClientStrategy> configured_strategies(const ExperimentConfig& cfg,
                                                  const Workbench& wb);

// One full pipeline instance for one run seed: label (per strategy effort),
// train, test, settle.
struct RunOutput {
  TrainResult train;
  double observed_loss = 0.0;  // single-sample test draw used for rewards
  std::vector<PayoffRecord> payoffs;
  ServerRecord server;
  double bound_value = 0.0;  // loss_bound at the executed strategies
};

RunOutput execute_run(const Workbench& wb, const ExperimentConfig& cfg,
                      std::uint64_t seed,
                      std::span<const ClientStrategy> strategies,
                      const Assignment& assignment);

struct ScenarioResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<SettlementRow> settlement;
  std::string certificate;  // verify scenario only
  std::string summary;      // human-readable recap, printed by the CLI
  bool pass = true;         // verify / bound_check verdict
};

ScenarioResult run_scenario(const ExperimentConfig& cfg);

// Writes trajectory.csv / settlement.csv (or certificate.txt for verify)
// under cfg.out_dir.
void write_scenario_files(const ExperimentConfig& cfg, const ScenarioResult& res);

// run_scenario + write_scenario_files. Returns 0 on success/pass, 1 on a
// failed certificate or bound check.
int run_scenario_to_files(const ExperimentConfig& cfg);

}  // namespace lceme
