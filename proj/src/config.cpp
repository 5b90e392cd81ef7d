#include "lceme/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lceme/errors.hpp"

namespace lceme {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config: cannot parse value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) bad_value(key, value);
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) bad_value(key, value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  bad_value(key, value);
}

// client.<i>.<field> / assign.<i>.batch
bool parse_indexed(const std::string& key, const std::string& prefix, int* index,
                   std::string* field) {
  if (key.rfind(prefix + ".", 0) != 0) return false;
  const std::string rest = key.substr(prefix.size() + 1);
  const std::size_t dotpos = rest.find('.');
  if (dotpos == std::string::npos)
    throw ConfigError("config: malformed key '" + key + "'");
  const std::string idx = rest.substr(0, dotpos);
  *field = rest.substr(dotpos + 1);
  *index = static_cast<int>(to_int(key, idx));
  return true;
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::vector<std::string> scenarios = {
      "train",         "effort_sweep", "gamma_sweep", "client_payoff",
      "server_payoff", "bound_check",  "verify"};
  if (std::find(scenarios.begin(), scenarios.end(), scenario) == scenarios.end())
    throw ConfigError("config: unknown scenario '" + scenario + "'");
  if (model != "ridge" && model != "logistic")
    throw ConfigError("config: model must be ridge or logistic");
  if (data != "synthetic" && data != "mnist")
    throw ConfigError("config: data must be synthetic or mnist");
  if (model == "logistic" && data == "synthetic" && classes < 2)
    throw ConfigError("config: logistic model needs classes >= 2");
  if (model == "ridge" && classes != 0)
    throw ConfigError("config: ridge model is regression; leave classes at 0");
  if (clients < 1) throw ConfigError("config: clients must be >= 1");
  if (het_degree < 0.0 || het_degree > 1.0)
    throw ConfigError("config: het_degree must be in [0, 1]");
  if (features < 1 && data == "synthetic")
    throw ConfigError("config: features must be >= 1");
  if (samples_per_client < 1)
    throw ConfigError("config: samples_per_client must be >= 1");
  if (test_samples < 1) throw ConfigError("config: test_samples must be >= 1");
  if (!(x_max_sq > 0.0) || !(y_max_sq > 0.0))
    throw ConfigError("config: x_max_sq and y_max_sq must be > 0");
  if (l2 < 0.0) throw ConfigError("config: l2 must be >= 0");
  if (rounds < 1 || local_iters < 1)
    throw ConfigError("config: rounds and local_iters must be >= 1");
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (label_cost < 0.0) throw ConfigError("config: label_cost must be >= 0");
  if (comp_cost.empty() ||
      (comp_cost.size() != 1 && comp_cost.size() != static_cast<std::size_t>(clients)))
    throw ConfigError("config: comp_cost needs 1 or `clients` entries");
  for (double c : comp_cost)
    if (!(c > 0.0)) throw ConfigError("config: comp_cost entries must be > 0");
  if (batch < 1) throw ConfigError("config: batch must be >= 1");
  if (effort != 0 && effort != 1) throw ConfigError("config: effort must be 0 or 1");
  if (gamma < 0.0) throw ConfigError("config: gamma must be >= 0");
  if (baseline != "zero" && baseline != "fstar")
    throw ConfigError("config: baseline must be zero or fstar");
  auto check_index = [this](const auto& m, const char* what) {
    for (const auto& [idx, value] : m) {
      (void)value;
      if (idx < 0 || idx >= clients)
        throw ConfigError(std::string("config: ") + what + " index " +
                          std::to_string(idx) + " outside [0, " +
                          std::to_string(clients) + ")");
    }
  };
  check_index(effort_override, "client override");
  check_index(batch_override, "client override");
  check_index(gamma_override, "client override");
  check_index(assign_override, "assign override");
  if (deviant_client < 0 || deviant_client >= clients)
    throw ConfigError("config: deviant_client outside the roster");
  if (data == "mnist" && (mnist_images.empty() || mnist_labels.empty()))
    throw ConfigError("config: mnist data needs mnist_images and mnist_labels");
  if (flat_batch < 1) throw ConfigError("config: flat_batch must be >= 1");
  for (int v : sweep_batch)
    if (v < 1) throw ConfigError("config: sweep.batch entries must be >= 1");
  for (int v : sweep_zero_effort)
    if (v < 0 || v > clients)
      throw ConfigError("config: sweep.zero_effort entries outside [0, clients]");
  for (double g : sweep_gamma)
    if (g < 0.0) throw ConfigError("config: sweep.gamma entries must be >= 0");
  for (double g : deviation_gammas)
    if (g < 0.0) throw ConfigError("config: deviation.gammas entries must be >= 0");
  for (int v : deviation_batches)
    if (v < 1) throw ConfigError("config: deviation.batches entries must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");

    int idx = 0;
    std::string field;
    if (parse_indexed(key, "client", &idx, &field)) {
      if (field == "effort") cfg.effort_override[idx] = static_cast<int>(to_int(key, value));
      else if (field == "batch") cfg.batch_override[idx] = static_cast<int>(to_int(key, value));
      else if (field == "gamma") cfg.gamma_override[idx] = to_double(key, value);
      else throw ConfigError("config: unknown key '" + key + "'");
      continue;
    }
    if (parse_indexed(key, "assign", &idx, &field)) {
      if (field == "batch") cfg.assign_override[idx] = static_cast<int>(to_int(key, value));
      else throw ConfigError("config: unknown key '" + key + "'");
      continue;
    }

    if (key == "scenario") cfg.scenario = value;
    else if (key == "model") cfg.model = value;
    else if (key == "data") cfg.data = value;
    else if (key == "clients") cfg.clients = static_cast<int>(to_int(key, value));
    else if (key == "het_degree") cfg.het_degree = to_double(key, value);
    else if (key == "classes") cfg.classes = static_cast<int>(to_int(key, value));
    else if (key == "features") cfg.features = static_cast<int>(to_int(key, value));
    else if (key == "samples_per_client") cfg.samples_per_client = static_cast<int>(to_int(key, value));
    else if (key == "test_samples") cfg.test_samples = static_cast<int>(to_int(key, value));
    else if (key == "noise_std") cfg.noise_std = to_double(key, value);
    else if (key == "x_max_sq") cfg.x_max_sq = to_double(key, value);
    else if (key == "y_max_sq") cfg.y_max_sq = to_double(key, value);
    else if (key == "l2") cfg.l2 = to_double(key, value);
    else if (key == "eta") cfg.eta = (value == "auto") ? -1.0 : to_double(key, value);
    else if (key == "rounds") cfg.rounds = static_cast<int>(to_int(key, value));
    else if (key == "local_iters") cfg.local_iters = static_cast<int>(to_int(key, value));
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& s : split_list(value)) cfg.seeds.push_back(to_u64(key, s));
    } else if (key == "data_seed") cfg.data_seed = to_u64(key, value);
    else if (key == "label_cost") cfg.label_cost = to_double(key, value);
    else if (key == "comp_cost") {
      cfg.comp_cost.clear();
      for (const std::string& s : split_list(value)) cfg.comp_cost.push_back(to_double(key, s));
    } else if (key == "batch") cfg.batch = static_cast<int>(to_int(key, value));
    else if (key == "effort") cfg.effort = static_cast<int>(to_int(key, value));
    else if (key == "gamma") cfg.gamma = to_double(key, value);
    else if (key == "baseline") cfg.baseline = value;
    else if (key == "strict_beta") cfg.strict_beta = to_bool(key, value);
    else if (key == "sweep.batch") {
      cfg.sweep_batch.clear();
      for (const std::string& s : split_list(value))
        cfg.sweep_batch.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "sweep.zero_effort") {
      cfg.sweep_zero_effort.clear();
      for (const std::string& s : split_list(value))
        cfg.sweep_zero_effort.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "sweep.gamma") {
      cfg.sweep_gamma.clear();
      for (const std::string& s : split_list(value))
        cfg.sweep_gamma.push_back(to_double(key, s));
    } else if (key == "deviant_client") cfg.deviant_client = static_cast<int>(to_int(key, value));
    else if (key == "deviation.gammas") {
      cfg.deviation_gammas.clear();
      for (const std::string& s : split_list(value))
        cfg.deviation_gammas.push_back(to_double(key, s));
    } else if (key == "deviation.batches") {
      cfg.deviation_batches.clear();
      for (const std::string& s : split_list(value))
        cfg.deviation_batches.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "flat_batch") cfg.flat_batch = static_cast<int>(to_int(key, value));
    else if (key == "mnist_images") cfg.mnist_images = value;
    else if (key == "mnist_labels") cfg.mnist_labels = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace lceme
