#pragma once

#include <vector>

#include "lceme/config.hpp"
#include "lceme/data.hpp"

namespace lceme {

struct GeneratedData {
  std::vector<Dataset> client_datasets;  // clean, pre-labeling-strategy
  Dataset test_set;
};

// Deterministic synthetic data from cfg.data_seed.
//
// Classification: K seeded class centers; a sample's class is client i's
// dominant class (i mod K) with probability q = het_degree, otherwise uniform
// over all classes; features are the center plus Gaussian noise, clipped into
// the x_max_sq ball. The test set draws classes uniformly.
//
// Regression: features uniform in the x_max_sq ball, labels x . w_true plus
// Gaussian noise clipped to [-sqrt(y_max_sq), sqrt(y_max_sq)]; q shifts each
// client's feature mean along a seeded per-client direction, which is what
// makes the client optima (and so the heterogeneity degrees) drift apart.
GeneratedData generate_synthetic(const ExperimentConfig& cfg);

}  // namespace lceme
