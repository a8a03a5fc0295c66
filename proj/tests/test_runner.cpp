#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "driftlearn/runner.hpp"

using namespace driftlearn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny_config(const std::string& out_dir) {
  RunConfig cfg = parse_config_text(
      "dataset.name = tiny\n"
      "stream.per_step = 120\n"
      "stream.test_count = 30\n"
      "stream.steps = 2\n"
      "train.hidden_dim = 12\n"
      "train.embed_dim = 6\n"
      "train.pretrain_epochs = 15\n"
      "train.epochs = 5\n"
      "train.gen_epochs = 2\n"
      "run.methods = st\n"
      "run.seeds = 1\n",
      "inline");
  cfg.out_dir = out_dir;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("driftlearn_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("a single-cell run writes the expected artifacts") {
  TempDir tmp("runner_single");
  const RunConfig cfg = tiny_config(tmp.path.string());
  const ExperimentReport report = run_experiment(cfg);

  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].ok);
  CHECK(experiment_exit_code(report) == 0);

  const fs::path cell = tmp.path / "tiny" / "st" / "seed1";
  CHECK(fs::exists(cell / "R.csv"));
  CHECK(fs::exists(cell / "summary.txt"));
  CHECK(fs::exists(cell / "model.ckpt"));
  CHECK_FALSE(fs::exists(cell / "probe.csv"));  // probe disabled
  CHECK(fs::exists(tmp.path / "tiny" / "summary.txt"));
  CHECK(fs::exists(tmp.path / "manifest.txt"));

  const std::string manifest = slurp(tmp.path / "manifest.txt");
  CHECK(manifest.find("[config]") != std::string::npos);
  CHECK(manifest.find("cell tiny st seed1 ok") != std::string::npos);
}

TEST_CASE("reruns of the same config are byte-identical") {
  TempDir tmp_a("runner_repro_a");
  TempDir tmp_b("runner_repro_b");
  RunConfig cfg = tiny_config(tmp_a.path.string());
  cfg.methods = {"st", "ours"};
  cfg.probe = true;
  cfg.probe_draws = 4;
  run_experiment(cfg);
  cfg.out_dir = tmp_b.path.string();
  run_experiment(cfg);

  for (const std::string method : {"st", "ours"}) {
    const fs::path rel = fs::path("tiny") / method / "seed1";
    CHECK(slurp(tmp_a.path / rel / "R.csv") == slurp(tmp_b.path / rel / "R.csv"));
    CHECK(slurp(tmp_a.path / rel / "summary.txt") ==
          slurp(tmp_b.path / rel / "summary.txt"));
    CHECK(slurp(tmp_a.path / rel / "probe.csv") ==
          slurp(tmp_b.path / rel / "probe.csv"));
    CHECK(slurp(tmp_a.path / rel / "model.ckpt") ==
          slurp(tmp_b.path / rel / "model.ckpt"));
  }
  CHECK(slurp(tmp_a.path / "tiny" / "summary.txt") ==
        slurp(tmp_b.path / "tiny" / "summary.txt"));
  CHECK(slurp(tmp_a.path / "manifest.txt") == slurp(tmp_b.path / "manifest.txt"));
}

TEST_CASE("multi-seed summaries carry mean and deviation rows per method") {
  TempDir tmp("runner_seeds");
  RunConfig cfg = tiny_config(tmp.path.string());
  cfg.seeds = {1, 2, 3, 4, 5};
  const ExperimentReport report = run_experiment(cfg);
  CHECK(report.cells.size() == 5);

  const std::string summary = slurp(tmp.path / "tiny" / "summary.txt");
  CHECK(summary.find("method n acc_t_mean acc_t_std acc_T_mean acc_T_std") !=
        std::string::npos);
  CHECK(summary.find("st 5 ") != std::string::npos);
}

TEST_CASE("the environment variable overrides the output root") {
  TempDir tmp("runner_env");
  RunConfig cfg = tiny_config((tmp.path / "ignored").string());
  const fs::path override_dir = tmp.path / "override";
  setenv("DRIFTLEARN_OUT", override_dir.string().c_str(), 1);
  const ExperimentReport report = run_experiment(cfg);
  unsetenv("DRIFTLEARN_OUT");

  CHECK(report.out_root == override_dir.string());
  CHECK(fs::exists(override_dir / "tiny" / "st" / "seed1" / "R.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "ignored"));
}

TEST_CASE("stream files cover the gold slot and every segment") {
  TempDir tmp("runner_stream");
  RunConfig cfg = tiny_config((tmp.path / "unused").string());
  write_stream_files(cfg, 7, (tmp.path / "stream").string());

  CHECK(fs::exists(tmp.path / "stream" / "gold.csv"));
  CHECK(fs::exists(tmp.path / "stream" / "seg_001_unlabeled.csv"));
  CHECK(fs::exists(tmp.path / "stream" / "seg_001_test.csv"));
  CHECK(fs::exists(tmp.path / "stream" / "seg_002_unlabeled.csv"));
  CHECK(fs::exists(tmp.path / "stream" / "meta.txt"));

  // files round-trip through the CSV loader
  const LabeledSet gold = load_csv((tmp.path / "stream" / "gold.csv").string());
  CHECK(gold.size() == 120);
  const LabeledSet pool =
      load_csv((tmp.path / "stream" / "seg_001_unlabeled.csv").string());
  CHECK(pool.size() == 90);
}

TEST_CASE("csv-backed streams run end to end") {
  TempDir tmp("runner_csv");
  // a small separable table written through the stream generator
  RunConfig gen_cfg = tiny_config((tmp.path / "unused").string());
  gen_cfg.per_step = 420;
  gen_cfg.steps = 1;
  gen_cfg.test_count = 100;
  write_stream_files(gen_cfg, 3, (tmp.path / "data").string());

  RunConfig cfg = tiny_config((tmp.path / "out").string());
  cfg.dataset_kind = "csv";
  cfg.dataset_name = "table";
  cfg.csv_path = (tmp.path / "data" / "gold.csv").string();
  cfg.per_step = 140;
  cfg.test_count = 40;
  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].ok);
  CHECK(fs::exists(tmp.path / "out" / "table" / "st" / "seed1" / "R.csv"));
}
