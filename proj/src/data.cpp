#include "lceme/data.hpp"

#include <cmath>
#include <string>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

bool is_class_index(double label, int num_classes) {
  if (!(label >= 0.0) || label != std::floor(label)) return false;
  return label < static_cast<double>(num_classes);
}

}  // namespace

Dataset::Dataset(std::vector<LabeledSample> samples, int num_classes,
                 double x_max_sq, double y_max_sq)
    : samples_(std::move(samples)),
      num_classes_(num_classes),
      x_max_sq_(x_max_sq),
      y_max_sq_(y_max_sq) {
  if (samples_.empty()) throw DimensionError("Dataset: must not be empty");
  if (num_classes_ < 0) throw DimensionError("Dataset: num_classes must be >= 0");
  if (!(x_max_sq_ >= 0.0) || !(y_max_sq_ >= 0.0))
    throw NumericError("Dataset: value bounds must be non-negative");

  feature_dim_ = static_cast<int>(samples_.front().features.size());
  if (feature_dim_ == 0) throw DimensionError("Dataset: zero feature dimension");

  // Tiny slack on the norm bound; generators clip to the bound exactly and
  // only rounding noise should ever land above it.
  const double x_cap = x_max_sq_ * (1.0 + 1e-12) + 1e-300;
  for (std::size_t m = 0; m < samples_.size(); ++m) {
    const LabeledSample& s = samples_[m];
    if (static_cast<int>(s.features.size()) != feature_dim_) {
      throw DimensionError("Dataset: sample " + std::to_string(m) +
                           " has feature dim " + std::to_string(s.features.size()) +
                           ", expected " + std::to_string(feature_dim_));
    }
    for (double v : s.features) {
      if (!std::isfinite(v)) throw NumericError("Dataset: non-finite feature value");
    }
    if (!std::isfinite(s.label)) throw NumericError("Dataset: non-finite label");
    if (norm_sq(s.features) > x_cap) {
      throw NumericError("Dataset: sample " + std::to_string(m) +
                         " violates the recorded feature bound x_max_sq=" +
                         std::to_string(x_max_sq_));
    }
    if (num_classes_ > 0) {
      if (!is_class_index(s.label, num_classes_)) {
        throw NumericError("Dataset: sample " + std::to_string(m) +
                           " label " + std::to_string(s.label) +
                           " is not a class index below " +
                           std::to_string(num_classes_));
      }
    } else if (s.label * s.label > y_max_sq_ * (1.0 + 1e-12) + 1e-300) {
      throw NumericError("Dataset: sample " + std::to_string(m) +
                         " violates the recorded label bound y_max_sq=" +
                         std::to_string(y_max_sq_));
    }
  }
}

}  // namespace lceme
