#include "lceme/synthetic.hpp"

#include <cmath>

#include "lceme/errors.hpp"
#include "lceme/rng.hpp"

namespace lceme {

namespace {

constexpr std::uint64_t kTagCenters = 1;
constexpr std::uint64_t kTagTrueModel = 2;
constexpr std::uint64_t kTagTest = 3;
constexpr std::uint64_t kTagShift = 4;
constexpr std::uint64_t kTagClient = 10;

void clip_to_ball(Vec& x, double x_max_sq) {
  const double n2 = norm_sq(x);
  if (n2 > x_max_sq) scale(std::sqrt(x_max_sq / n2) * (1.0 - 1e-12), x);
}

std::vector<Vec> class_centers(const ExperimentConfig& cfg) {
  RngStream rng = RngStream::substream(cfg.data_seed, {kTagCenters});
  const double radius = 0.6 * std::sqrt(cfg.x_max_sq);
  std::vector<Vec> centers;
  centers.reserve(static_cast<std::size_t>(cfg.classes));
  for (int c = 0; c < cfg.classes; ++c) {
    Vec v(static_cast<std::size_t>(cfg.features));
    double n = 0.0;
    while (n <= 1e-12) {
      for (double& e : v) e = rng.next_gaussian();
      n = std::sqrt(norm_sq(v));
    }
    scale(radius / n, v);
    centers.push_back(std::move(v));
  }
  return centers;
}

LabeledSample class_sample(const ExperimentConfig& cfg, const std::vector<Vec>& centers,
                           int label, RngStream& rng) {
  const double spread = 0.5 * 0.6 * std::sqrt(cfg.x_max_sq) /
                        std::sqrt(static_cast<double>(cfg.features));
  LabeledSample s;
  s.features = centers[static_cast<std::size_t>(label)];
  for (double& e : s.features) e += spread * rng.next_gaussian();
  clip_to_ball(s.features, cfg.x_max_sq);
  s.label = static_cast<double>(label);
  return s;
}

GeneratedData generate_classification(const ExperimentConfig& cfg) {
  const std::vector<Vec> centers = class_centers(cfg);
  const auto k = static_cast<std::uint64_t>(cfg.classes);
  GeneratedData out;
  out.client_datasets.reserve(static_cast<std::size_t>(cfg.clients));
  for (int i = 0; i < cfg.clients; ++i) {
    RngStream rng = RngStream::substream(cfg.data_seed,
                                         {kTagClient, static_cast<std::uint64_t>(i)});
    const int dominant = i % cfg.classes;
    std::vector<LabeledSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.samples_per_client));
    for (int m = 0; m < cfg.samples_per_client; ++m) {
      const int label = (rng.next_double() < cfg.het_degree)
                            ? dominant
                            : static_cast<int>(rng.next_below(k));
      samples.push_back(class_sample(cfg, centers, label, rng));
    }
    out.client_datasets.emplace_back(std::move(samples), cfg.classes, cfg.x_max_sq,
                                     cfg.y_max_sq);
  }
  RngStream rng = RngStream::substream(cfg.data_seed, {kTagTest});
  std::vector<LabeledSample> test;
  test.reserve(static_cast<std::size_t>(cfg.test_samples));
  for (int m = 0; m < cfg.test_samples; ++m)
    test.push_back(class_sample(cfg, centers, static_cast<int>(rng.next_below(k)), rng));
  out.test_set = Dataset(std::move(test), cfg.classes, cfg.x_max_sq, cfg.y_max_sq);
  return out;
}

GeneratedData generate_regression(const ExperimentConfig& cfg) {
  RngStream model_rng = RngStream::substream(cfg.data_seed, {kTagTrueModel});
  Vec w_true(static_cast<std::size_t>(cfg.features));
  double n = 0.0;
  while (n <= 1e-12) {
    for (double& e : w_true) e = model_rng.next_gaussian();
    n = std::sqrt(norm_sq(w_true));
  }
  // Cauchy-Schwarz keeps |x . w_true| <= 0.6*sqrt(y_max_sq) inside the ball,
  // so only noise can push a label toward the clip.
  scale(0.6 * std::sqrt(cfg.y_max_sq / cfg.x_max_sq) / n, w_true);

  const double coord = std::sqrt(cfg.x_max_sq / cfg.features);
  const double y_cap = std::sqrt(cfg.y_max_sq);

  auto draw = [&](RngStream& rng, const Vec* shift) {
    LabeledSample s;
    s.features.resize(static_cast<std::size_t>(cfg.features));
    for (double& e : s.features) e = rng.next_uniform(-coord, coord);
    if (shift != nullptr) axpy(1.0, *shift, s.features);
    clip_to_ball(s.features, cfg.x_max_sq);
    double y = dot(s.features, w_true) + cfg.noise_std * rng.next_gaussian();
    y = std::min(std::max(y, -y_cap), y_cap);
    s.label = y;
    return s;
  };

  GeneratedData out;
  out.client_datasets.reserve(static_cast<std::size_t>(cfg.clients));
  for (int i = 0; i < cfg.clients; ++i) {
    Vec shift(static_cast<std::size_t>(cfg.features), 0.0);
    if (cfg.het_degree > 0.0) {
      RngStream dir_rng = RngStream::substream(cfg.data_seed,
                                               {kTagShift, static_cast<std::uint64_t>(i)});
      double sn = 0.0;
      while (sn <= 1e-12) {
        for (double& e : shift) e = dir_rng.next_gaussian();
        sn = std::sqrt(norm_sq(shift));
      }
      scale(cfg.het_degree * 0.3 * std::sqrt(cfg.x_max_sq) / sn, shift);
    }
    RngStream rng = RngStream::substream(cfg.data_seed,
                                         {kTagClient, static_cast<std::uint64_t>(i)});
    std::vector<LabeledSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.samples_per_client));
    for (int m = 0; m < cfg.samples_per_client; ++m)
      samples.push_back(draw(rng, cfg.het_degree > 0.0 ? &shift : nullptr));
    out.client_datasets.emplace_back(std::move(samples), 0, cfg.x_max_sq, cfg.y_max_sq);
  }
  RngStream rng = RngStream::substream(cfg.data_seed, {kTagTest});
  std::vector<LabeledSample> test;
  test.reserve(static_cast<std::size_t>(cfg.test_samples));
  for (int m = 0; m < cfg.test_samples; ++m) test.push_back(draw(rng, nullptr));
  out.test_set = Dataset(std::move(test), 0, cfg.x_max_sq, cfg.y_max_sq);
  return out;
}

}  // namespace

GeneratedData generate_synthetic(const ExperimentConfig& cfg) {
  if (cfg.het_degree < 0.0 || cfg.het_degree > 1.0)
    throw ConfigError("generate_synthetic: het_degree outside [0, 1]");
  if (cfg.model == "logistic") {
    if (cfg.classes < 1) throw ConfigError("generate_synthetic: classes must be >= 1");
    return generate_classification(cfg);
  }
  return generate_regression(cfg);
}

}  // namespace lceme
