#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lceme/config.hpp"
#include "lceme/data.hpp"
#include "lceme/synthetic.hpp"

namespace lceme {

// IDX format (big-endian): images carry magic 0x00000803 then count, rows,
// cols and count*rows*cols unsigned bytes; labels carry magic 0x00000801 then
// count and count bytes in 0..9. Parse errors (bad magic, short file,
// out-of-range label, image/label count mismatch) throw IoError with the
// offending byte offset where that is meaningful.

struct IdxImages {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::uint8_t>> pixels;  // one flattened image each
};

IdxImages load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Full ingestion: pixels scaled to [0,1] and flattened (rows*cols features),
// the recorded x_max_sq is the realized max squared norm, and the pool is
// partitioned into `clients` datasets of `samples_per_client` by the
// heterogeneity rule (probability het_degree of drawing from the dominant
// class i mod 10, otherwise from the whole pool), plus a test set of
// test_samples drawn from the leftovers. Deterministic in cfg.data_seed.
GeneratedData load_mnist_subset(const ExperimentConfig& cfg);

}  // namespace lceme
