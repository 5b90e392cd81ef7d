#include "lceme/mnist_idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lceme/errors.hpp"
#include "lceme/rng.hpp"

namespace lceme {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > buf.size()) {
    throw IoError("truncated IDX file " + path + ": expected 4 bytes at offset " +
                  std::to_string(offset) + ", file has " + std::to_string(buf.size()));
  }
  return (static_cast<std::uint32_t>(buf[offset]) << 24) |
         (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
         static_cast<std::uint32_t>(buf[offset + 3]);
}

}  // namespace

IdxImages load_idx_images(const std::string& path) {
  const std::vector<std::uint8_t> buf = read_file(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kImageMagic) {
    throw IoError("bad IDX image magic in " + path + ": got " +
                  std::to_string(magic) + ", expected " + std::to_string(kImageMagic));
  }
  const std::uint32_t count = read_be32(buf, 4, path);
  const std::uint32_t rows = read_be32(buf, 8, path);
  const std::uint32_t cols = read_be32(buf, 12, path);
  const std::size_t pixel_bytes = static_cast<std::size_t>(count) * rows * cols;
  if (buf.size() != 16 + pixel_bytes) {
    throw IoError("truncated IDX image file " + path + ": header promises " +
                  std::to_string(16 + pixel_bytes) + " bytes, file has " +
                  std::to_string(buf.size()) + " (payload starts at offset 16)");
  }
  IdxImages out;
  out.rows = static_cast<int>(rows);
  out.cols = static_cast<int>(cols);
  out.pixels.reserve(count);
  std::size_t offset = 16;
  const std::size_t image_size = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t i = 0; i < count; ++i) {
    out.pixels.emplace_back(buf.begin() + static_cast<std::ptrdiff_t>(offset),
                            buf.begin() + static_cast<std::ptrdiff_t>(offset + image_size));
    offset += image_size;
  }
  return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const std::vector<std::uint8_t> buf = read_file(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kLabelMagic) {
    throw IoError("bad IDX label magic in " + path + ": got " +
                  std::to_string(magic) + ", expected " + std::to_string(kLabelMagic));
  }
  const std::uint32_t count = read_be32(buf, 4, path);
  if (buf.size() != 8 + count) {
    throw IoError("truncated IDX label file " + path + ": header promises " +
                  std::to_string(8 + count) + " bytes, file has " +
                  std::to_string(buf.size()));
  }
  std::vector<int> labels;
  labels.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const int v = buf[8 + i];
    if (v > 9) {
      throw IoError("IDX label file " + path + ": label " + std::to_string(v) +
                    " at offset " + std::to_string(8 + i) + " (labels must be 0-9)");
    }
    labels.push_back(v);
  }
  return labels;
}

GeneratedData load_mnist_subset(const ExperimentConfig& cfg) {
  const IdxImages images = load_idx_images(cfg.mnist_images);
  const std::vector<int> labels = load_idx_labels(cfg.mnist_labels);
  if (images.pixels.size() != labels.size()) {
    throw IoError("IDX count mismatch: " + std::to_string(images.pixels.size()) +
                  " images vs " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t dim = static_cast<std::size_t>(images.rows) * images.cols;

  std::vector<LabeledSample> pool(images.pixels.size());
  double x_max_sq = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].features.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      pool[i].features[j] = static_cast<double>(images.pixels[i][j]) / 255.0;
    pool[i].label = static_cast<double>(labels[i]);
    x_max_sq = std::max(x_max_sq, norm_sq(pool[i].features));
  }

  // Remaining-sample bookkeeping per class; global draws walk the class
  // buckets so they stay uniform over everything still unclaimed.
  constexpr int kClasses = 10;
  std::vector<std::vector<std::size_t>> by_class(kClasses);
  for (std::size_t i = 0; i < pool.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  std::size_t remaining = pool.size();

  auto take_from_class = [&](int c, RngStream& rng) {
    auto& bucket = by_class[static_cast<std::size_t>(c)];
    if (bucket.empty())
      throw ConfigError("mnist partition: class " + std::to_string(c) +
                        " exhausted; lower samples_per_client or clients");
    const std::size_t k = rng.next_below(bucket.size());
    const std::size_t idx = bucket[k];
    bucket[k] = bucket.back();
    bucket.pop_back();
    --remaining;
    return idx;
  };
  auto take_global = [&](RngStream& rng) {
    if (remaining == 0) throw ConfigError("mnist partition: sample pool exhausted");
    std::size_t r = rng.next_below(remaining);
    for (int c = 0; c < kClasses; ++c) {
      const std::size_t sz = by_class[static_cast<std::size_t>(c)].size();
      if (r < sz) {
        auto& bucket = by_class[static_cast<std::size_t>(c)];
        const std::size_t idx = bucket[r];
        bucket[r] = bucket.back();
        bucket.pop_back();
        --remaining;
        return idx;
      }
      r -= sz;
    }
    throw ConfigError("mnist partition: internal bookkeeping error");
  };

  GeneratedData out;
  out.client_datasets.reserve(static_cast<std::size_t>(cfg.clients));
  for (int i = 0; i < cfg.clients; ++i) {
    RngStream rng = RngStream::substream(cfg.data_seed,
                                         {20, static_cast<std::uint64_t>(i)});
    std::vector<LabeledSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.samples_per_client));
    const int dominant = i % kClasses;
    for (int m = 0; m < cfg.samples_per_client; ++m) {
      const std::size_t idx = (rng.next_double() < cfg.het_degree)
                                  ? take_from_class(dominant, rng)
                                  : take_global(rng);
      samples.push_back(pool[idx]);
    }
    out.client_datasets.emplace_back(std::move(samples), kClasses, x_max_sq, 0.0);
  }
  RngStream rng = RngStream::substream(cfg.data_seed, {21});
  std::vector<LabeledSample> test;
  test.reserve(static_cast<std::size_t>(cfg.test_samples));
  for (int m = 0; m < cfg.test_samples; ++m) test.push_back(pool[take_global(rng)]);
  out.test_set = Dataset(std::move(test), kClasses, x_max_sq, 0.0);
  return out;
}

}  // namespace lceme
