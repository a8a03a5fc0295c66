#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftlearn {

// Invalid or unknown configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment description parsed from a flat key-value file: one dotted key
// per line, `key = value`, '#' comments. Unknown keys are rejected.
struct RunConfig {
  // dataset
  std::string dataset_name = "synthetic";
  std::string dataset_kind = "synthetic";  // synthetic | csv
  std::string csv_path;
  bool csv_header = false;

  // stream shape
  std::size_t per_step = 500;
  std::size_t test_count = 150;
  std::size_t steps = 20;  // synthetic streams only

  // synthetic drift geometry
  std::size_t dims = 2;
  std::size_t classes = 2;
  std::size_t modes_per_class = 1;
  double separation = 6.0;
  double velocity = 0.5;
  double stddev = 1.0;

  // training
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 64;
  double learning_rate = 0.01;
  int pretrain_epochs = 50;
  int epochs = 20;      // adaptation / replay epochs per step
  int gen_epochs = 5;
  std::size_t batch = 64;
  std::size_t lookback = 100;
  int cluster_iters = 10;
  double ils_weight = 0.1;
  double label_energy = 0.9;
  double eta1 = 0.01;
  double eta2 = 0.01;
  double subspace_energy = 0.90;
  double mt_weight = 0.0;
  double mt_momentum = 0.99;

  // run grid
  std::vector<std::string> methods{"st", "jt", "pl_conf", "ours"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool probe = false;
  std::vector<double> probe_bounds{0.0, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::size_t probe_draws = 20;
  std::string out_dir = "out";
  std::size_t threads = 0;  // 0 = hardware default
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Canonical echo of every key with its effective value; written to the run
// manifest so any cell can be re-executed from the manifest alone.
std::string config_to_text(const RunConfig& cfg);

void validate(const RunConfig& cfg);

}  // namespace driftlearn
