#pragma once

#include <vector>

#include "lceme/linalg.hpp"

namespace lceme {

// One training/testing element. `label` holds a class index (stored exactly
// as an integral double) for classification, or a real target for regression.
struct LabeledSample {
  Vec features;
  double label = 0.0;

  bool operator==(const LabeledSample&) const = default;
};

// An ordered, dimension-homogeneous sample collection with recorded value
// bounds. Sample order is part of the dataset's identity: seeded mini-batch
// draws index into it, so two datasets with permuted samples are different
// datasets.
//
// num_classes == 0 marks a regression dataset; then y_max_sq bounds every
// label's square. For classification (num_classes >= 1) labels must be
// integral and < num_classes. x_max_sq bounds every feature vector's squared
// norm in either case. All of this is checked at construction.
class Dataset {
 public:
  // Placeholder state for containers and deferred assignment; every
  // operation that consumes a dataset rejects an empty one.
  Dataset() = default;

  Dataset(std::vector<LabeledSample> samples, int num_classes, double x_max_sq,
          double y_max_sq);

  bool classification() const { return num_classes_ > 0; }
  int num_classes() const { return num_classes_; }
  int feature_dim() const { return feature_dim_; }
  double x_max_sq() const { return x_max_sq_; }
  double y_max_sq() const { return y_max_sq_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const LabeledSample& sample(std::size_t m) const { return samples_[m]; }

  int label_class(std::size_t m) const {
    return static_cast<int>(samples_[m].label);
  }

  bool operator==(const Dataset& other) const = default;

 private:
  std::vector<LabeledSample> samples_;
  int num_classes_ = 0;
  int feature_dim_ = 0;
  double x_max_sq_ = 0.0;
  double y_max_sq_ = 0.0;
};

}  // namespace lceme
