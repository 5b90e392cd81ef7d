#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lceme {

// Parsed experiment config. The on-disk format is flat UTF-8 "key = value"
// lines, '#' comments, comma-separated lists; unknown keys are hard errors so
// typos and schema drift fail loudly. See README for the full key reference.
struct ExperimentConfig {
  std::string scenario = "train";  // train|effort_sweep|gamma_sweep|client_payoff|
                                   // server_payoff|bound_check|verify
  std::string model = "ridge";     // ridge|logistic
  std::string data = "synthetic";  // synthetic|mnist

  // Synthetic data shape.
  int clients = 10;
  double het_degree = 0.4;  // q: dominant-class fraction knob
  int classes = 0;          // K; 0 means regression
  int features = 5;
  int samples_per_client = 200;
  int test_samples = 500;
  double noise_std = 0.1;   // ridge label noise
  double x_max_sq = 4.0;
  double y_max_sq = 4.0;

  // Training.
  double l2 = 0.1;
  double eta = -1.0;  // < 0: auto, 1/(2L) once constants are known
  int rounds = 30;
  int local_iters = 1;
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t data_seed = 12345;

  // Mechanism costs.
  double label_cost = 0.05;
  std::vector<double> comp_cost = {1e-4};  // broadcast when a single entry

  // Default strategy and per-client overrides.
  int batch = 50;
  int effort = 1;
  double gamma = 1.0;
  std::map<int, int> effort_override;
  std::map<int, int> batch_override;
  std::map<int, double> gamma_override;
  std::map<int, int> assign_override;  // forced D' entries

  std::string baseline = "zero";  // zero|fstar
  bool strict_beta = false;

  // Scenario-specific sweeps.
  std::vector<int> sweep_batch = {10, 50};
  std::vector<int> sweep_zero_effort = {0, 2};
  std::vector<double> sweep_gamma = {0.5, 1.0, 1.5, 2.0};
  int deviant_client = 0;
  std::vector<double> deviation_gammas = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<int> deviation_batches;  // empty: 10,20,...,2*D'
  int flat_batch = 100;

  // MNIST inputs.
  std::string mnist_images;
  std::string mnist_labels;

  std::string out_dir = "out";

  void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace lceme
