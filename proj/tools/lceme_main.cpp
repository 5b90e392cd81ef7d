// lceme: federated-training incentive mechanism toolkit.
//
// Subcommands:
//   train        run the training + settlement pipeline for a config
//   sweep        run the config's scenario (effort/gamma sweeps, payoffs, ...)
//   bound        print the training-loss bound and its cross-check
//   assign       print the server's optimal computation-effort assignment
//   verify       run the truthfulness/IR certificates
//   mnist-check  validate a pair of IDX files
//
// Exit codes: 0 success/pass, 1 certificate or check fail, 2 configuration
// error, 3 I/O error.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "lceme/csv_io.hpp"
#include "lceme/errors.hpp"
#include "lceme/mnist_idx.hpp"
#include "lceme/scenario.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_path, "experiment config file")
      ->required();
  cmd->add_option("--out", opts->out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--seed", opts->seed, "run with this single seed")
      ->each([opts](const std::string&) { opts->seed_set = true; });
}

lceme::ExperimentConfig load(const CommonOpts& opts) {
  lceme::ExperimentConfig cfg = lceme::load_config_file(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed_set) cfg.seeds = {opts.seed};
  return cfg;
}

int run_pipeline(const CommonOpts& opts, const char* forced_scenario) {
  lceme::ExperimentConfig cfg = load(opts);
  if (forced_scenario != nullptr) cfg.scenario = forced_scenario;
  const lceme::ScenarioResult res = lceme::run_scenario(cfg);
  lceme::write_scenario_files(cfg, res);
  std::cout << res.summary << '\n';
  if (cfg.scenario == "verify") {
    std::cout << res.certificate;
    std::cout << "wrote " << cfg.out_dir << "/certificate.txt\n";
  } else {
    std::cout << "wrote " << cfg.out_dir << "/trajectory.csv and "
              << cfg.out_dir << "/settlement.csv\n";
  }
  return res.pass ? 0 : 1;
}

int cmd_bound(const CommonOpts& opts) {
  const lceme::ExperimentConfig cfg = load(opts);
  const lceme::Workbench wb = lceme::prepare_workbench(cfg);
  const auto strategies = lceme::configured_strategies(cfg, wb);
  const double closed = lceme::loss_bound(wb.bound, strategies);
  const double termwise = lceme::loss_bound_term_sum(wb.bound, strategies);
  std::cout << "L=" << lceme::format_double(wb.bound.smooth)
            << " mu=" << lceme::format_double(wb.bound.strong)
            << " eta=" << lceme::format_double(wb.bound.eta)
            << " beta=" << lceme::format_double(wb.bound.beta)
            << " G_sq=" << lceme::format_double(wb.bound.grad_bound_sq)
            << " init_dist_sq=" << lceme::format_double(wb.bound.init_dist_sq)
            << '\n';
  std::cout << "loss_bound=" << lceme::format_double(closed)
            << " term_by_term=" << lceme::format_double(termwise) << '\n';
  return 0;
}

int cmd_assign(const CommonOpts& opts) {
  const lceme::ExperimentConfig cfg = load(opts);
  const lceme::Workbench wb = lceme::prepare_workbench(cfg);
  const lceme::Assignment& a = wb.assignment;
  std::cout << "A=" << lceme::format_double(a.series_A) << '\n';
  for (int i = 0; i < a.num_clients(); ++i) {
    std::cout << "client " << i << ": D'=" << a.batch[static_cast<std::size_t>(i)]
              << " D*_real=" << lceme::format_double(a.batch_real[static_cast<std::size_t>(i)])
              << " floor=" << lceme::format_double(a.min_batch[static_cast<std::size_t>(i)])
              << " phi=" << lceme::format_double(a.phi[static_cast<std::size_t>(i)])
              << " omega=" << lceme::format_double(a.omega[static_cast<std::size_t>(i)])
              << '\n';
  }
  return 0;
}

int cmd_mnist_check(const std::string& images_path, const std::string& labels_path) {
  const lceme::IdxImages images = lceme::load_idx_images(images_path);
  const std::vector<int> labels = lceme::load_idx_labels(labels_path);
  if (images.pixels.size() != labels.size()) {
    throw lceme::IoError("count mismatch: " + std::to_string(images.pixels.size()) +
                         " images vs " + std::to_string(labels.size()) + " labels");
  }
  std::vector<int> histogram(10, 0);
  for (int l : labels) ++histogram[static_cast<std::size_t>(l)];
  std::cout << "images=" << images.pixels.size() << " rows=" << images.rows
            << " cols=" << images.cols
            << " feature_dim=" << images.rows * images.cols << '\n';
  std::cout << "label histogram:";
  for (int c = 0; c < 10; ++c) std::cout << ' ' << c << ':' << histogram[static_cast<std::size_t>(c)];
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated-training incentive mechanism toolkit"};
  app.require_subcommand(1);

  CommonOpts train_opts, sweep_opts, bound_opts, assign_opts, verify_opts;
  std::string mnist_images, mnist_labels;

  add_common(app.add_subcommand("train", "training + settlement pipeline"), &train_opts);
  add_common(app.add_subcommand("sweep", "run the config's scenario"), &sweep_opts);
  add_common(app.add_subcommand("bound", "print the training-loss bound"), &bound_opts);
  add_common(app.add_subcommand("assign", "print the optimal assignment"), &assign_opts);
  add_common(app.add_subcommand("verify", "truthfulness and IR certificates"), &verify_opts);
  CLI::App* mnist = app.add_subcommand("mnist-check", "validate IDX files");
  mnist->add_option("--images", mnist_images, "IDX image file")->required();
  mnist->add_option("--labels", mnist_labels, "IDX label file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train")) return run_pipeline(train_opts, "train");
    if (app.got_subcommand("sweep")) return run_pipeline(sweep_opts, nullptr);
    if (app.got_subcommand("bound")) return cmd_bound(bound_opts);
    if (app.got_subcommand("assign")) return cmd_assign(assign_opts);
    if (app.got_subcommand("verify")) return run_pipeline(verify_opts, "verify");
    if (app.got_subcommand("mnist-check"))
      return cmd_mnist_check(mnist_images, mnist_labels);
  } catch (const lceme::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const lceme::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lceme::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
