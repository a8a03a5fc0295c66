// Command-line front end: `run` executes a config's method x seed grid,
// `probe` measures parameter-noise robustness of a saved checkpoint, and
// `gen-stream` materializes a drifted stream as CSV files.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftlearn/config.hpp"
#include "driftlearn/model.hpp"
#include "driftlearn/replay.hpp"
#include "driftlearn/runner.hpp"
#include "driftlearn/stream.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;

int cmd_run(const std::string& config_path) {
  driftlearn::RunConfig cfg;
  try {
    cfg = driftlearn::parse_config(config_path);
  } catch (const driftlearn::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfigError;
  }

  const driftlearn::ExperimentReport report = driftlearn::run_experiment(cfg);
  for (const auto& cell : report.cells) {
    if (cell.ok) {
      std::printf("ok     %-12s seed%-4llu acc_t=%.4f acc_T=%.4f\n",
                  cell.method.c_str(), static_cast<unsigned long long>(cell.seed),
                  cell.acc_t, cell.acc_T);
    } else {
      std::printf("failed %-12s seed%-4llu %s\n", cell.method.c_str(),
                  static_cast<unsigned long long>(cell.seed), cell.error.c_str());
    }
  }
  std::printf("artifacts under %s\n", report.out_root.c_str());
  return driftlearn::experiment_exit_code(report);
}

int cmd_probe(const std::string& checkpoint, const std::string& testset,
              const std::vector<double>& bounds, std::size_t draws,
              std::uint64_t seed, bool header, const std::string& out_csv) {
  try {
    const driftlearn::MlpClassifier model = driftlearn::load_checkpoint(checkpoint);
    const driftlearn::LabeledSet test = driftlearn::load_csv(testset, header);
    const std::vector<driftlearn::ProbePoint> points =
        driftlearn::flatness_probe(model, test, bounds, draws, seed);

    std::printf("%-8s %-10s %-10s\n", "b", "mean_acc", "std_acc");
    for (const auto& p : points) {
      std::printf("%-8.4f %-10.4f %-10.4f\n", p.bound, p.mean_accuracy,
                  p.std_accuracy);
    }
    if (!out_csv.empty()) {
      driftlearn::write_probe_csv(points, out_csv);
      std::printf("wrote %s\n", out_csv.c_str());
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "probe failed: %s\n", e.what());
    return kExitPartialFailure;
  }
}

int cmd_gen_stream(const std::string& spec_path, const std::string& out_dir,
                   std::uint64_t seed) {
  driftlearn::RunConfig cfg;
  try {
    cfg = driftlearn::parse_config(spec_path);
  } catch (const driftlearn::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfigError;
  }
  try {
    driftlearn::write_stream_files(cfg, seed, out_dir);
    std::printf("stream written to %s\n", out_dir.c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gen-stream failed: %s\n", e.what());
    return kExitPartialFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drifted-stream learning benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute the experiment grid of a config");
  run->add_option("config", config_path, "flat key-value config file")->required();

  std::string checkpoint;
  std::string testset;
  std::vector<double> bounds{0.0, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::size_t draws = 20;
  std::uint64_t probe_seed = 1;
  bool header = false;
  std::string out_csv;
  auto* probe = app.add_subcommand("probe", "parameter-noise robustness of a checkpoint");
  probe->add_option("checkpoint", checkpoint, "model checkpoint file")->required();
  probe->add_option("testset", testset, "labeled CSV test set")->required();
  probe->add_option("--bounds", bounds, "noise bounds to probe");
  probe->add_option("--draws", draws, "perturbation draws per bound");
  probe->add_option("--seed", probe_seed, "noise seed");
  probe->add_flag("--header", header, "skip the first CSV line");
  probe->add_option("--out", out_csv, "also write the curve to this CSV");

  std::string spec_path;
  std::string stream_out;
  std::uint64_t stream_seed = 1;
  auto* gen = app.add_subcommand("gen-stream", "write a drifted stream as CSV files");
  gen->add_option("spec", spec_path, "config file describing the stream")->required();
  gen->add_option("out", stream_out, "output directory")->required();
  gen->add_option("--seed", stream_seed, "stream seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (run->parsed()) return cmd_run(config_path);
  if (probe->parsed()) {
    return cmd_probe(checkpoint, testset, bounds, draws, probe_seed, header, out_csv);
  }
  if (gen->parsed()) return cmd_gen_stream(spec_path, stream_out, stream_seed);
  return kExitConfigError;
}
