#include "lceme/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lceme/errors.hpp"
#include "lceme/mnist_idx.hpp"

namespace lceme {

namespace {

constexpr std::uint64_t kTagLabel = 0xDA7A;
constexpr std::uint64_t kTagTestDraw = 0x7E57;
constexpr std::uint64_t kTagPilot = 0xB0;

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<double> broadcast_comp_cost(const ExperimentConfig& cfg) {
  if (cfg.comp_cost.size() == 1)
    return std::vector<double>(static_cast<std::size_t>(cfg.clients), cfg.comp_cost[0]);
  return cfg.comp_cost;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Workbench prepare_workbench(const ExperimentConfig& cfg) {
  cfg.validate();
  Workbench wb;
  wb.model.kind = cfg.model == "ridge" ? ModelKind::ridge_regression
                                       : ModelKind::multinomial_logistic;
  wb.model.l2_coeff = cfg.l2;

  GeneratedData data =
      cfg.data == "mnist" ? load_mnist_subset(cfg) : generate_synthetic(cfg);
  wb.clean = std::move(data.client_datasets);
  wb.test_set = std::move(data.test_set);

  std::size_t total = 0;
  std::size_t smallest = wb.clean.front().size();
  for (const Dataset& ds : wb.clean) {
    total += ds.size();
    smallest = std::min(smallest, ds.size());
  }
  if (static_cast<std::size_t>(cfg.batch) > smallest)
    throw ConfigError("config: batch " + std::to_string(cfg.batch) +
                      " exceeds the smallest client dataset (" +
                      std::to_string(smallest) + " samples)");
  wb.weights.reserve(wb.clean.size());
  for (const Dataset& ds : wb.clean)
    wb.weights.push_back(static_cast<double>(ds.size()) / static_cast<double>(total));

  wb.constants = estimate_constants(wb.model, wb.clean);
  wb.eta = cfg.eta > 0.0 ? cfg.eta : 0.5 / wb.constants.smooth;
  wb.w0.assign(static_cast<std::size_t>(param_dim(wb.model, wb.clean.front())), 0.0);

  const HeterogeneityReport het =
      estimate_heterogeneity(wb.model, wb.clean, wb.weights);
  wb.w_star = het.w_star;
  wb.f_star = het.f_star;

  // Pilot truthful run at the default batch; its per-round global models are
  // the probe set for the variance and gradient-norm constants.
  std::vector<ClientProfile> pilot_profiles;
  std::vector<ClientStrategy> pilot_strats;
  for (std::size_t i = 0; i < wb.clean.size(); ++i) {
    pilot_profiles.push_back(
        {wb.weights[i], 1.0, wb.clean[i], 0.0, het.het[i]});
    pilot_strats.push_back({1, cfg.batch, 1.0});
  }
  TrainConfig pilot_cfg;
  pilot_cfg.eta = wb.eta;
  pilot_cfg.rounds = cfg.rounds;
  pilot_cfg.local_iters = cfg.local_iters;
  pilot_cfg.seed = RngStream::substream(cfg.data_seed, {kTagPilot}).next_u64();
  pilot_cfg.w0 = wb.w0;
  pilot_cfg.record_reported = true;
  const TrainResult pilot = run_training(wb.model, pilot_cfg, pilot_profiles,
                                         pilot_strats, wb.clean, wb.f_star);

  std::vector<Vec> probes;
  probes.reserve(pilot.global_trace.size() + 2);
  probes.push_back(wb.w0);
  probes.push_back(wb.w_star);
  for (const Vec& w : pilot.global_trace) probes.push_back(w);

  wb.bound.smooth = wb.constants.smooth;
  wb.bound.strong = wb.constants.strong;
  wb.bound.eta = wb.eta;
  wb.bound.rounds = cfg.rounds;
  wb.bound.local_iters = cfg.local_iters;
  wb.bound.beta = compute_beta_analytic(wb.model, wb.clean.front().x_max_sq(),
                                        wb.clean.front().y_max_sq(),
                                        wb.clean.front().num_classes(),
                                        cfg.strict_beta)
                      .value;
  wb.bound.grad_bound_sq = estimate_g_sq(wb.model, wb.clean, probes);
  wb.bound.init_dist_sq = dist_sq(wb.w0, wb.w_star);
  wb.bound.weight = wb.weights;
  wb.bound.het = het.het;
  wb.bound.sigma_sq.reserve(wb.clean.size());
  for (const Dataset& ds : wb.clean)
    wb.bound.sigma_sq.push_back(estimate_sigma_sq(wb.model, ds, probes));
  wb.bound.validate();

  wb.costs.label_cost = cfg.label_cost;
  wb.costs.comp_cost = broadcast_comp_cost(cfg);

  const double baseline = cfg.baseline == "fstar" ? wb.f_star : 0.0;
  wb.assignment = optimal_assignment(wb.bound, wb.costs, baseline);
  if (!cfg.assign_override.empty()) {
    std::vector<int> batch = wb.assignment.batch;
    for (const auto& [idx, value] : cfg.assign_override)
      batch[static_cast<std::size_t>(idx)] = value;
    wb.assignment = make_assignment(wb.bound, wb.costs, std::move(batch), baseline);
  }
  return wb;
}

std::vector<ClientStrategy> truthful_strategies(const Workbench& wb) {
  std::vector<ClientStrategy> out;
  out.reserve(wb.clean.size());
  for (int d : wb.assignment.batch) out.push_back({1, d, 1.0});
  return out;
}

std::vector<ClientStrategy> configured_strategies(const ExperimentConfig& cfg,
                                                  const Workbench& wb) {
  std::vector<ClientStrategy> out = truthful_strategies(wb);
  for (auto& s : out) {
    s.effort = cfg.effort;
    s.gamma = cfg.gamma;
  }
  for (const auto& [i, e] : cfg.effort_override) out[static_cast<std::size_t>(i)].effort = e;
  for (const auto& [i, d] : cfg.batch_override) out[static_cast<std::size_t>(i)].batch = d;
  for (const auto& [i, g] : cfg.gamma_override) out[static_cast<std::size_t>(i)].gamma = g;
  return out;
}

RunOutput execute_run(const Workbench& wb, const ExperimentConfig& cfg,
                      std::uint64_t seed,
                      std::span<const ClientStrategy> strategies,
                      const Assignment& assignment) {
  RunOutput out;
  std::vector<ClientProfile> profiles;
  profiles.reserve(wb.clean.size());
  for (std::size_t i = 0; i < wb.clean.size(); ++i) {
    RngStream label_rng =
        RngStream::substream(seed, {kTagLabel, static_cast<std::uint64_t>(i)});
    Dataset trained = apply_labeling(wb.clean[i], strategies[i].effort, label_rng);
    profiles.push_back({wb.weights[i], wb.costs.comp_cost[i], std::move(trained),
                        wb.bound.sigma_sq[i], wb.bound.het[i]});
  }
  TrainConfig tc;
  tc.eta = wb.eta;
  tc.rounds = cfg.rounds;
  tc.local_iters = cfg.local_iters;
  tc.seed = seed;
  tc.w0 = wb.w0;
  tc.record_reported = true;
  out.train = run_training(wb.model, tc, profiles, strategies, wb.clean, wb.f_star);

  RngStream test_rng = RngStream::substream(seed, {kTagTestDraw});
  out.observed_loss = test_loss(wb.model, out.train.w_final, wb.test_set,
                                TestLossMode::single_sample, &test_rng);

  std::vector<double> rewards;
  rewards.reserve(wb.clean.size());
  for (std::size_t i = 0; i < wb.clean.size(); ++i) {
    rewards.push_back(reward_payment(static_cast<int>(i), assignment, wb.costs,
                                     out.observed_loss));
    out.payoffs.push_back(realized_payoff(static_cast<int>(i), strategies[i],
                                          assignment, wb.bound, wb.costs,
                                          out.observed_loss));
  }
  out.server = server_payoff(out.observed_loss, rewards);
  out.bound_value = loss_bound(wb.bound, strategies);
  return out;
}

namespace {

void append_rows(const Workbench& wb, const std::string& scenario_id,
                 std::uint64_t seed, std::span<const ClientStrategy> strategies,
                 const RunOutput& run, ScenarioResult* res,
                 bool final_round_only = false) {
  const int rounds = static_cast<int>(run.train.loss_per_round.size());
  for (int t = 1; t <= rounds; ++t) {
    if (final_round_only && t != rounds) continue;
    const Vec& wt = run.train.global_trace[static_cast<std::size_t>(t - 1)];
    const double tl = test_loss(wb.model, wt, wb.test_set, TestLossMode::full_mean);
    const double acc = test_accuracy(wb.model, wt, wb.test_set);
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      TrajectoryRow row;
      row.scenario = scenario_id;
      row.seed = seed;
      row.round = t;
      row.client = static_cast<int>(i);
      row.effort = strategies[i].effort;
      row.batch = strategies[i].batch;
      row.gamma = strategies[i].gamma;
      row.train_loss = run.train.loss_per_round[static_cast<std::size_t>(t - 1)];
      row.test_loss = tl;
      row.accuracy = acc;
      res->trajectory.push_back(std::move(row));
    }
  }
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    SettlementRow row;
    row.seed = seed;
    row.client = static_cast<int>(i);
    row.reward = run.payoffs[i].reward;
    row.payoff = run.payoffs[i].payoff;
    row.payoff_hat = run.payoffs[i].payoff_hat;
    row.server_payoff = run.server.payoff;
    row.bound = run.bound_value;
    res->settlement.push_back(row);
  }
}

void scenario_train(const ExperimentConfig& cfg, const Workbench& wb,
                    ScenarioResult* res) {
  const std::vector<ClientStrategy> strategies = configured_strategies(cfg, wb);
  std::vector<double> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
    append_rows(wb, "train", seed, strategies, run, res);
    finals.push_back(run.train.loss_per_round.back());
  }
  std::ostringstream s;
  s << "train: seeds=" << cfg.seeds.size()
    << " mean_final_loss=" << format_double(mean(finals));
  res->summary = s.str();
}

void scenario_effort_sweep(const ExperimentConfig& cfg, const Workbench& wb,
                           ScenarioResult* res) {
  std::ostringstream s;
  s << "effort_sweep:";
  for (int batch : cfg.sweep_batch) {
    for (int zero : cfg.sweep_zero_effort) {
      std::vector<ClientStrategy> strategies(wb.clean.size(),
                                             ClientStrategy{1, batch, 1.0});
      for (int i = 0; i < zero; ++i)
        strategies[static_cast<std::size_t>(i)].effort = 0;
      const std::string id = "effort_sweep/D=" + std::to_string(batch) +
                             "/zero=" + std::to_string(zero);
      std::vector<double> finals;
      for (std::uint64_t seed : cfg.seeds) {
        const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
        append_rows(wb, id, seed, strategies, run, res);
        finals.push_back(run.train.loss_per_round.back());
      }
      s << ' ' << id << " mean_final_loss=" << format_double(mean(finals));
    }
  }
  res->summary = s.str();
}

void scenario_gamma_sweep(const ExperimentConfig& cfg, const Workbench& wb,
                          ScenarioResult* res) {
  std::ostringstream s;
  s << "gamma_sweep:";
  for (double gamma : cfg.sweep_gamma) {
    std::vector<ClientStrategy> strategies(wb.clean.size(),
                                           ClientStrategy{1, cfg.batch, gamma});
    const std::string id = "gamma_sweep/gamma=" + short_num(gamma);
    std::vector<double> finals;
    for (std::uint64_t seed : cfg.seeds) {
      const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
      append_rows(wb, id, seed, strategies, run, res);
      finals.push_back(run.train.loss_per_round.back());
    }
    s << ' ' << id << " mean_final_loss=" << format_double(mean(finals));
  }
  res->summary = s.str();
}

void scenario_client_payoff(const ExperimentConfig& cfg, const Workbench& wb,
                            ScenarioResult* res) {
  const int dev = cfg.deviant_client;
  const int assigned = wb.assignment.batch[static_cast<std::size_t>(dev)];
  std::vector<int> batches = cfg.deviation_batches;
  if (batches.empty()) {
    for (double f : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) {
      const int d = std::max(1, static_cast<int>(std::lround(f * assigned)));
      if (std::find(batches.begin(), batches.end(), d) == batches.end())
        batches.push_back(d);
    }
  }
  std::ostringstream s;
  s << "client_payoff: deviant=" << dev << " assigned_D=" << assigned << '\n';
  for (int effort = 1; effort >= 0; --effort) {
    for (double gamma : cfg.deviation_gammas) {
      for (int batch : batches) {
        std::vector<ClientStrategy> strategies = truthful_strategies(wb);
        strategies[static_cast<std::size_t>(dev)] = {effort, batch, gamma};
        const std::string id = "client_payoff/e=" + std::to_string(effort) +
                               "/gamma=" + short_num(gamma) +
                               "/D=" + std::to_string(batch);
        const double analytic = payoff_hat(dev, strategies[static_cast<std::size_t>(dev)],
                                           wb.assignment, wb.bound, wb.costs);
        std::vector<double> realized;
        for (std::uint64_t seed : cfg.seeds) {
          const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
          append_rows(wb, id, seed, strategies, run, res, /*final_round_only=*/true);
          realized.push_back(run.payoffs[static_cast<std::size_t>(dev)].payoff);
        }
        s << "  " << id << " payoff_hat=" << format_double(analytic)
          << " mean_realized=" << format_double(mean(realized)) << '\n';
      }
    }
  }
  res->summary = s.str();
}

void scenario_server_payoff(const ExperimentConfig& cfg, const Workbench& wb,
                            ScenarioResult* res) {
  double total = 0.0;
  for (int d : wb.assignment.batch) total += d;
  const int uniform =
      std::max(1, static_cast<int>(std::lround(total / static_cast<double>(cfg.clients))));

  struct Alloc {
    std::string name;
    std::vector<int> batch;
  };
  std::vector<Alloc> allocs;
  allocs.push_back({"optimal", wb.assignment.batch});
  allocs.push_back({"uniform" + std::to_string(uniform),
                    std::vector<int>(static_cast<std::size_t>(cfg.clients), uniform)});
  allocs.push_back({"flat" + std::to_string(cfg.flat_batch),
                    std::vector<int>(static_cast<std::size_t>(cfg.clients), cfg.flat_batch)});

  std::ostringstream s;
  s << "server_payoff:";
  for (const Alloc& alloc : allocs) {
    const Assignment a =
        make_assignment(wb.bound, wb.costs, alloc.batch, wb.assignment.baseline);
    const double surrogate = bound_server_payoff(a, wb.bound, wb.costs);
    std::vector<ClientStrategy> strategies;
    for (int d : alloc.batch) strategies.push_back({1, d, 1.0});
    const std::string id = "server_payoff/alloc=" + alloc.name;
    std::vector<double> realized;
    for (std::uint64_t seed : cfg.seeds) {
      const RunOutput run = execute_run(wb, cfg, seed, strategies, a);
      append_rows(wb, id, seed, strategies, run, res);
      realized.push_back(run.server.payoff);
    }
    s << ' ' << id << " bound_payoff=" << format_double(surrogate)
      << " mean_realized=" << format_double(mean(realized));
  }
  res->summary = s.str();
}

void scenario_bound_check(const ExperimentConfig& cfg, const Workbench& wb,
                          ScenarioResult* res) {
  const std::vector<ClientStrategy> strategies = configured_strategies(cfg, wb);
  const double bound_value = loss_bound(wb.bound, strategies);
  std::vector<double> excess;
  for (std::uint64_t seed : cfg.seeds) {
    const RunOutput run = execute_run(wb, cfg, seed, strategies, wb.assignment);
    append_rows(wb, "bound_check", seed, strategies, run, res);
    excess.push_back(run.train.excess_loss);
  }
  const double mean_excess = mean(excess);
  res->pass = mean_excess <= bound_value;
  std::ostringstream s;
  s << "bound_check: mean_excess=" << format_double(mean_excess)
    << " bound=" << format_double(bound_value) << ' '
    << (res->pass ? "PASS" : "FAIL");
  res->summary = s.str();
}

void scenario_verify(const ExperimentConfig& cfg, const Workbench& wb,
                     ScenarioResult* res) {
  (void)cfg;
  const TruthfulnessCertificate truth =
      verify_truthfulness(wb.assignment, wb.bound, wb.costs);
  const IrCertificate ir = verify_ir(wb.assignment, wb.bound, wb.costs);
  res->pass = truth.pass && ir.pass;

  std::ostringstream c;
  c << "truthfulness: " << (truth.pass ? "PASS" : "FAIL") << '\n';
  for (std::size_t i = 0; i < truth.clients.size(); ++i) {
    const ClientCertificate& cc = truth.clients[i];
    c << "  client " << i << ": D'=" << wb.assignment.batch[i]
      << " truthful=" << format_double(cc.truthful)
      << " worst_deviation=" << format_double(cc.worst_deviation) << " at (e="
      << cc.worst_strategy.effort << ", D=" << cc.worst_strategy.batch
      << ", gamma=" << short_num(cc.worst_strategy.gamma) << ") "
      << (cc.pass ? "PASS" : "FAIL") << '\n';
  }
  c << "individual_rationality: " << (ir.pass ? "PASS" : "FAIL") << '\n';
  for (std::size_t i = 0; i < ir.truthful.size(); ++i) {
    c << "  client " << i << ": truthful=" << format_double(ir.truthful[i]) << ' '
      << (ir.truthful[i] >= -1e-9 ? "PASS" : "FAIL") << '\n';
  }
  c << "overall: " << (res->pass ? "PASS" : "FAIL") << '\n';
  res->certificate = c.str();
  res->summary = "verify: " + std::string(res->pass ? "PASS" : "FAIL");
}

}  // namespace

ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  const Workbench wb = prepare_workbench(cfg);
  ScenarioResult res;
  if (cfg.scenario == "train") scenario_train(cfg, wb, &res);
  else if (cfg.scenario == "effort_sweep") scenario_effort_sweep(cfg, wb, &res);
  else if (cfg.scenario == "gamma_sweep") scenario_gamma_sweep(cfg, wb, &res);
  else if (cfg.scenario == "client_payoff") scenario_client_payoff(cfg, wb, &res);
  else if (cfg.scenario == "server_payoff") scenario_server_payoff(cfg, wb, &res);
  else if (cfg.scenario == "bound_check") scenario_bound_check(cfg, wb, &res);
  else if (cfg.scenario == "verify") scenario_verify(cfg, wb, &res);
  else throw ConfigError("run_scenario: unknown scenario '" + cfg.scenario + "'");
  return res;
}

void write_scenario_files(const ExperimentConfig& cfg, const ScenarioResult& res) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create out_dir '" + cfg.out_dir + "': " + ec.message());

  if (cfg.scenario == "verify") {
    const std::string path = cfg.out_dir + "/certificate.txt";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path);
    out << res.certificate;
    if (!out) throw IoError("write failed: " + path);
  } else {
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", res.trajectory);
    write_settlement_csv(cfg.out_dir + "/settlement.csv", res.settlement);
  }
}

int run_scenario_to_files(const ExperimentConfig& cfg) {
  const ScenarioResult res = run_scenario(cfg);
  write_scenario_files(cfg, res);
  return res.pass ? 0 : 1;
}

}  // namespace lceme
