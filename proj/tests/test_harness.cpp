#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lceme/config.hpp"
#include "lceme/csv_io.hpp"
#include "lceme/errors.hpp"
#include "lceme/mnist_idx.hpp"
#include "lceme/scenario.hpp"
#include "lceme/synthetic.hpp"

using namespace lceme;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<std::uint8_t>* buf, std::uint32_t v) {
  buf->push_back(static_cast<std::uint8_t>(v >> 24));
  buf->push_back(static_cast<std::uint8_t>(v >> 16));
  buf->push_back(static_cast<std::uint8_t>(v >> 8));
  buf->push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> idx_images(int count, int rows, int cols) {
  std::vector<std::uint8_t> buf;
  push_be32(&buf, 0x00000803);
  push_be32(&buf, static_cast<std::uint32_t>(count));
  push_be32(&buf, static_cast<std::uint32_t>(rows));
  push_be32(&buf, static_cast<std::uint32_t>(cols));
  for (int i = 0; i < count * rows * cols; ++i)
    buf.push_back(static_cast<std::uint8_t>((i * 37 + 11) % 256));
  return buf;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> buf;
  push_be32(&buf, 0x00000801);
  push_be32(&buf, static_cast<std::uint32_t>(labels.size()));
  buf.insert(buf.end(), labels.begin(), labels.end());
  return buf;
}

ExperimentConfig small_ridge_config() {
  ExperimentConfig cfg;
  cfg.scenario = "train";
  cfg.model = "ridge";
  cfg.clients = 3;
  cfg.features = 2;
  cfg.samples_per_client = 40;
  cfg.test_samples = 50;
  cfg.het_degree = 0.3;
  cfg.l2 = 0.1;
  cfg.rounds = 8;
  cfg.seeds = {1, 2};
  cfg.batch = 10;
  cfg.label_cost = 0.02;
  cfg.comp_cost = {2e-4};
  return cfg;
}

}  // namespace

TEST_CASE("config parsing: values, lists, and per-client overrides") {
  const std::string text = R"(
# effort experiment
scenario = effort_sweep
model = logistic
classes = 5
features = 4
clients = 6
seeds = 3, 4, 5
comp_cost = 1e-4, 2e-4, 3e-4, 4e-4, 5e-4, 6e-4
client.2.effort = 0
client.2.gamma = 1.5
assign.1.batch = 60
sweep.batch = 10, 50
eta = auto
)";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.scenario == "effort_sweep");
  CHECK(cfg.model == "logistic");
  CHECK(cfg.classes == 5);
  CHECK((cfg.seeds == std::vector<std::uint64_t>{3, 4, 5}));
  CHECK(cfg.comp_cost.size() == 6);
  CHECK(cfg.effort_override.at(2) == 0);
  CHECK(cfg.gamma_override.at(2) == 1.5);
  CHECK(cfg.assign_override.at(1) == 60);
  CHECK((cfg.sweep_batch == std::vector<int>{10, 50}));
  CHECK(cfg.eta == -1.0);
}

TEST_CASE("config parsing: unknown keys and bad values are rejected") {
  CHECK_THROWS_WITH_AS(parse_config_text("mini_batch = 50\n"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("rounds = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("scenario = mystery\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("clients = 2\nclient.5.effort = 0\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("model = logistic\n"), ConfigError);
}

TEST_CASE("synthetic classification: partition respects the heterogeneity knob") {
  ExperimentConfig cfg;
  cfg.model = "logistic";
  cfg.classes = 5;
  cfg.clients = 5;
  cfg.features = 3;
  cfg.samples_per_client = 2000;
  cfg.test_samples = 10;
  cfg.het_degree = 0.4;
  const GeneratedData data = generate_synthetic(cfg);

  // per-sample class law: dominant w.p. q + (1-q)/K, others (1-q)/K each
  const double p_dom = 0.4 + 0.6 / 5.0;
  const double p_oth = 0.6 / 5.0;
  for (int i = 0; i < cfg.clients; ++i) {
    const Dataset& ds = data.client_datasets[static_cast<std::size_t>(i)];
    std::vector<int> counts(5, 0);
    for (std::size_t m = 0; m < ds.size(); ++m)
      ++counts[static_cast<std::size_t>(ds.label_class(m))];
    double stat = 0.0;
    for (int c = 0; c < 5; ++c) {
      const double expect =
          cfg.samples_per_client * (c == i % 5 ? p_dom : p_oth);
      const double d = counts[static_cast<std::size_t>(c)] - expect;
      stat += d * d / expect;
    }
    CHECK(stat < 13.277);  // chi-square(4), 99th percentile
  }
}

TEST_CASE("synthetic classification: degenerate knob values") {
  ExperimentConfig cfg;
  cfg.model = "logistic";
  cfg.classes = 4;
  cfg.clients = 4;
  cfg.features = 2;
  cfg.samples_per_client = 300;
  cfg.test_samples = 10;

  cfg.het_degree = 1.0;
  const GeneratedData pure = generate_synthetic(cfg);
  for (int i = 0; i < 4; ++i) {
    const Dataset& ds = pure.client_datasets[static_cast<std::size_t>(i)];
    for (std::size_t m = 0; m < ds.size(); ++m) CHECK(ds.label_class(m) == i);
  }

  cfg.het_degree = 0.0;
  const GeneratedData flat = generate_synthetic(cfg);
  for (const Dataset& ds : flat.client_datasets) {
    std::vector<int> counts(4, 0);
    for (std::size_t m = 0; m < ds.size(); ++m)
      ++counts[static_cast<std::size_t>(ds.label_class(m))];
    const double expect = 300.0 / 4.0;
    double stat = 0.0;
    for (int c : counts) stat += (c - expect) * (c - expect) / expect;
    CHECK(stat < 11.345);  // chi-square(3), 99th percentile
  }
}

TEST_CASE("synthetic generation is deterministic in the data seed") {
  ExperimentConfig cfg = small_ridge_config();
  const GeneratedData a = generate_synthetic(cfg);
  const GeneratedData b = generate_synthetic(cfg);
  CHECK(a.test_set == b.test_set);
  for (int i = 0; i < cfg.clients; ++i)
    CHECK(a.client_datasets[static_cast<std::size_t>(i)] ==
          b.client_datasets[static_cast<std::size_t>(i)]);
  cfg.data_seed += 1;
  const GeneratedData c = generate_synthetic(cfg);
  CHECK_FALSE(a.test_set == c.test_set);
}

TEST_CASE("IDX loader: happy path") {
  const std::string img_path = temp_path("lceme_idx_ok_images");
  const std::string lbl_path = temp_path("lceme_idx_ok_labels");
  write_bytes(img_path, idx_images(3, 28, 28));
  write_bytes(lbl_path, idx_labels({0, 7, 9}));
  const IdxImages images = load_idx_images(img_path);
  CHECK(images.rows == 28);
  CHECK(images.cols == 28);
  CHECK(images.pixels.size() == 3);
  CHECK(images.pixels[0].size() == 784);
  CHECK((load_idx_labels(lbl_path) == std::vector<int>{0, 7, 9}));

  ExperimentConfig cfg;
  cfg.model = "logistic";
  cfg.classes = 10;
  cfg.data = "mnist";
  cfg.mnist_images = img_path;
  cfg.mnist_labels = lbl_path;
  cfg.clients = 1;
  cfg.samples_per_client = 2;
  cfg.test_samples = 1;
  cfg.het_degree = 0.0;
  const GeneratedData data = load_mnist_subset(cfg);
  CHECK(data.client_datasets[0].feature_dim() == 784);
  CHECK(data.client_datasets[0].size() == 2);
  for (const LabeledSample& s : data.client_datasets[0].samples())
    for (double v : s.features) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("IDX loader: bad magic, truncation, bad labels, count mismatch") {
  const std::string path = temp_path("lceme_idx_bad");

  std::vector<std::uint8_t> wrong_magic = idx_images(1, 2, 2);
  wrong_magic[3] = 0x01;
  write_bytes(path, wrong_magic);
  CHECK_THROWS_WITH_AS(load_idx_images(path), doctest::Contains("magic"), IoError);

  std::vector<std::uint8_t> truncated = idx_images(2, 4, 4);
  truncated.resize(truncated.size() - 5);
  write_bytes(path, truncated);
  CHECK_THROWS_WITH_AS(load_idx_images(path), doctest::Contains("offset 16"), IoError);

  write_bytes(path, idx_labels({3, 10}));
  CHECK_THROWS_WITH_AS(load_idx_labels(path), doctest::Contains("0-9"), IoError);

  const std::string img_path = temp_path("lceme_idx_mismatch_images");
  const std::string lbl_path = temp_path("lceme_idx_mismatch_labels");
  write_bytes(img_path, idx_images(3, 2, 2));
  write_bytes(lbl_path, idx_labels({1, 2}));
  ExperimentConfig cfg;
  cfg.model = "logistic";
  cfg.classes = 10;
  cfg.data = "mnist";
  cfg.mnist_images = img_path;
  cfg.mnist_labels = lbl_path;
  cfg.clients = 1;
  cfg.samples_per_client = 1;
  cfg.test_samples = 1;
  CHECK_THROWS_WITH_AS(load_mnist_subset(cfg), doctest::Contains("mismatch"), IoError);
}

TEST_CASE("CSV emission: refusal, round trip, stable bytes") {
  const std::string path = temp_path("lceme_traj.csv");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(write_trajectory_csv(path, {}), IoError);
  CHECK_FALSE(std::filesystem::exists(path));

  std::vector<TrajectoryRow> rows;
  TrajectoryRow r;
  r.scenario = "train";
  r.seed = 42;
  r.round = 1;
  r.client = 0;
  r.effort = 1;
  r.batch = 50;
  r.gamma = 1.0 / 3.0;
  r.train_loss = 0.1234567890123456789;
  r.test_loss = 1e-17;
  r.accuracy = 0.75;
  rows.push_back(r);
  write_trajectory_csv(path, rows);
  const std::vector<TrajectoryRow> back = read_trajectory_csv(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].gamma == r.gamma);  // exact: 17 significant digits round-trip
  CHECK(back[0].train_loss == r.train_loss);
  CHECK(back[0].test_loss == r.test_loss);

  const std::string spath = temp_path("lceme_settle.csv");
  std::vector<SettlementRow> srows(1);
  srows[0].seed = 7;
  srows[0].client = 2;
  srows[0].reward = -0.25;
  srows[0].payoff = 1.0 / 7.0;
  srows[0].payoff_hat = 0.0;
  srows[0].server_payoff = -3.5;
  srows[0].bound = 9.87654321e-5;
  write_settlement_csv(spath, srows);
  const std::vector<SettlementRow> sback = read_settlement_csv(spath);
  REQUIRE(sback.size() == 1);
  CHECK(sback[0].payoff == srows[0].payoff);
  CHECK(sback[0].bound == srows[0].bound);
}

TEST_CASE("verify scenario passes on its own optimal assignment") {
  ExperimentConfig cfg = small_ridge_config();
  cfg.scenario = "verify";
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.pass);
  CHECK(res.certificate.find("overall: PASS") != std::string::npos);
}

TEST_CASE("scenario outputs are byte-identical across runs") {
  ExperimentConfig cfg = small_ridge_config();
  cfg.out_dir = temp_path("lceme_det_a");
  const ScenarioResult first = run_scenario(cfg);
  write_scenario_files(cfg, first);
  cfg.out_dir = temp_path("lceme_det_b");
  const ScenarioResult second = run_scenario(cfg);
  write_scenario_files(cfg, second);

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(temp_path("lceme_det_a") + "/trajectory.csv") ==
        slurp(temp_path("lceme_det_b") + "/trajectory.csv"));
  CHECK(slurp(temp_path("lceme_det_a") + "/settlement.csv") ==
        slurp(temp_path("lceme_det_b") + "/settlement.csv"));
  CHECK_FALSE(first.trajectory.empty());
  CHECK_FALSE(first.settlement.empty());
}

TEST_CASE("settlement accounting: money is conserved in a pipeline run") {
  ExperimentConfig cfg = small_ridge_config();
  const Workbench wb = prepare_workbench(cfg);
  const auto strategies = configured_strategies(cfg, wb);
  const RunOutput run = execute_run(wb, cfg, 11, strategies, wb.assignment);
  double client_total = 0.0;
  double cost_total = 0.0;
  for (std::size_t i = 0; i < run.payoffs.size(); ++i) {
    client_total += run.payoffs[i].payoff;
    cost_total += run.payoffs[i].labeling_cost + run.payoffs[i].comp_cost;
  }
  CHECK(run.server.payoff + client_total ==
        doctest::Approx(-run.observed_loss - cost_total).epsilon(1e-10));
}

TEST_CASE("realized IR holds on average with the optimal-loss baseline") {
  ExperimentConfig cfg = small_ridge_config();
  cfg.baseline = "fstar";
  const Workbench wb = prepare_workbench(cfg);
  const auto strategies = truthful_strategies(wb);
  std::vector<double> mean_payoff(static_cast<std::size_t>(cfg.clients), 0.0);
  const int seeds = 50;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
    for (std::size_t i = 0; i < mean_payoff.size(); ++i)
      mean_payoff[i] += run.payoffs[i].payoff / seeds;
  }
  for (double u : mean_payoff) CHECK(u >= 0.0);
}

TEST_CASE("client_payoff scenario: deviant payoffs never beat truthful") {
  ExperimentConfig cfg = small_ridge_config();
  cfg.scenario = "client_payoff";
  cfg.seeds = {5};
  cfg.deviation_gammas = {0.5, 1.0, 2.0};
  const ScenarioResult res = run_scenario(cfg);
  const Workbench wb = prepare_workbench(cfg);
  bool saw_strict_negative = false;
  for (const SettlementRow& row : res.settlement) {
    if (row.client != cfg.deviant_client) continue;
    CHECK(row.payoff_hat <= 1e-9);
    if (row.payoff_hat < -1e-9) saw_strict_negative = true;
  }
  CHECK(saw_strict_negative);
  CHECK(wb.assignment.batch.size() == 3);
}
