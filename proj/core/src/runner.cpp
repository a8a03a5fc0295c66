#include "driftlearn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "driftlearn/baselines.hpp"
#include "driftlearn/eval.hpp"
#include "driftlearn/replay.hpp"
#include "driftlearn/rng.hpp"
#include "driftlearn/training.hpp"

namespace driftlearn {

namespace fs = std::filesystem;

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.hidden_dim = cfg.hidden_dim;
  p.embed_dim = cfg.embed_dim;
  p.learning_rate = cfg.learning_rate;
  p.pretrain_epochs = cfg.pretrain_epochs;
  p.adapt_epochs = cfg.epochs;
  p.gen_epochs = cfg.gen_epochs;
  p.batch_size = cfg.batch;
  p.lookback = cfg.lookback;
  p.cluster_iters = cfg.cluster_iters;
  p.ils_weight = cfg.ils_weight;
  p.label_energy = cfg.label_energy;
  p.eta1 = cfg.eta1;
  p.eta2 = cfg.eta2;
  p.subspace_energy = cfg.subspace_energy;
  p.mt_weight = cfg.mt_weight;
  p.mt_momentum = cfg.mt_momentum;
  return p;
}

// test split over all segments, used by the flatness probe
LabeledSet pooled_test_set(const std::vector<StreamSegment>& segments,
                           const Evaluator& eval) {
  LabeledSet pool;
  for (const auto& seg : segments) pool = concat(pool, eval.oracle_test_set(seg));
  return pool;
}

}  // namespace

std::string resolve_out_root(const RunConfig& cfg) {
  if (const char* env = std::getenv("DRIFTLEARN_OUT"); env && *env) {
    return env;
  }
  return cfg.out_dir;
}

StreamData build_stream(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.dataset_kind == "synthetic") {
    const double test_fraction =
        static_cast<double>(cfg.test_count) / static_cast<double>(cfg.per_step);
    DriftSpec spec = make_linear_drift_spec(
        cfg.dims, cfg.classes, cfg.modes_per_class, cfg.separation, cfg.velocity,
        cfg.stddev, cfg.per_step, cfg.steps, test_fraction,
        derive_seed(seed, "stream"));
    return generate_drift_stream(spec);
  }
  const LabeledSet table = load_csv(cfg.csv_path, cfg.csv_header);
  const std::vector<std::size_t> order = induce_drift_order(table, 0);
  const LabeledSet drifting = apply_order(table, order);
  return segment_stream(drifting, cfg.per_step, cfg.test_count,
                        derive_seed(seed, "stream"));
}

namespace {

CellReport run_cell(const RunConfig& cfg, const std::string& method,
                    std::uint64_t seed, const fs::path& root) {
  CellReport report;
  report.method = method;
  report.seed = seed;

  const fs::path cell_dir =
      root / cfg.dataset_name / method / ("seed" + std::to_string(seed));
  const auto rel = [&](const fs::path& p) {
    return fs::relative(p, root).generic_string();
  };

  try {
    fs::create_directories(cell_dir);
    const StreamData stream = build_stream(cfg, seed);
    const Evaluator eval;
    const PipelineConfig pipeline = pipeline_config(cfg);
    const RunOutcome outcome =
        run_method(method, stream.gold, stream.segments, eval, pipeline, seed);

    report.acc_t = acc_t(outcome.R);
    report.acc_T = acc_T(outcome.R);
    if (!outcome.pseudo_accuracy.empty()) {
      const Aggregate agg = aggregate(outcome.pseudo_accuracy);
      report.mean_pseudo_accuracy = agg.mean;
    }

    const fs::path r_path = cell_dir / "R.csv";
    write_acc_matrix_csv(outcome.R, r_path.string());
    report.artifacts.push_back(rel(r_path));

    SummaryRecord rec;
    rec.run_id = cfg.dataset_name + "-" + method + "-s" + std::to_string(seed);
    rec.dataset = cfg.dataset_name;
    rec.method = method;
    rec.seed = seed;
    rec.acc_t = report.acc_t;
    rec.acc_T = report.acc_T;
    const fs::path s_path = cell_dir / "summary.txt";
    write_summary(rec, s_path.string());
    report.artifacts.push_back(rel(s_path));

    const fs::path ckpt_path = cell_dir / "model.ckpt";
    save_checkpoint(outcome.final_model, ckpt_path.string());
    report.artifacts.push_back(rel(ckpt_path));

    if (cfg.probe) {
      const LabeledSet test_pool = pooled_test_set(stream.segments, eval);
      const std::vector<ProbePoint> points =
          flatness_probe(outcome.final_model, test_pool, cfg.probe_bounds,
                         cfg.probe_draws, derive_seed(seed, "probe"));
      const fs::path p_path = cell_dir / "probe.csv";
      write_probe_csv(points, p_path.string());
      report.artifacts.push_back(rel(p_path));
    }

    report.ok = true;
  } catch (const std::exception& e) {
    report.ok = false;
    report.error = e.what();
  }
  return report;
}

void write_aggregate_summary(const RunConfig& cfg,
                             const std::vector<CellReport>& cells,
                             const fs::path& root) {
  const fs::path path = root / cfg.dataset_name / "summary.txt";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("run_experiment: cannot open " + path.string());

  out << "dataset " << cfg.dataset_name << "\n";
  out << "seeds " << cfg.seeds.size() << "\n\n";
  out << "method n acc_t_mean acc_t_std acc_T_mean acc_T_std\n";
  for (const auto& method : cfg.methods) {
    std::vector<double> at;
    std::vector<double> aT;
    for (const auto& c : cells) {
      if (c.method == method && c.ok) {
        at.push_back(c.acc_t);
        aT.push_back(c.acc_T);
      }
    }
    if (at.empty()) {
      out << method << " 0 - - - -\n";
      continue;
    }
    const Aggregate m_t = aggregate(at);
    const Aggregate m_T = aggregate(aT);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %zu %.6f %.6f %.6f %.6f\n", method.c_str(),
                  at.size(), m_t.mean, m_t.stddev, m_T.mean, m_T.stddev);
    out << buf;
  }
}

void write_manifest(const RunConfig& cfg, const std::vector<CellReport>& cells,
                    const fs::path& root) {
  const fs::path path = root / "manifest.txt";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("run_experiment: cannot open " + path.string());
  out << "# experiment manifest\n";
  out << "# paths are relative to this file's directory\n";
  out << "[config]\n" << config_to_text(cfg) << "[cells]\n";
  for (const auto& c : cells) {
    out << "cell " << cfg.dataset_name << " " << c.method << " seed" << c.seed << " "
        << (c.ok ? "ok" : "failed");
    if (c.ok) {
      out << " acc_t=" << format_real(c.acc_t) << " acc_T=" << format_real(c.acc_T);
      for (const auto& a : c.artifacts) out << " " << a;
    } else {
      out << " error=\"" << c.error << "\"";
    }
    out << "\n";
  }
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg) {
  validate(cfg);
  ExperimentReport report;
  report.out_root = resolve_out_root(cfg);
  const fs::path root(report.out_root);
  fs::create_directories(root / cfg.dataset_name);

  struct Cell {
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Cell> grid;
  for (const auto& method : cfg.methods) {
    for (const auto seed : cfg.seeds) grid.push_back({method, seed});
  }

  std::vector<CellReport> results(grid.size());
  std::atomic<std::size_t> next{0};
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min(grid.size(), cfg.threads == 0 ? hw : cfg.threads);

  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) break;
      results[i] = run_cell(cfg, grid[i].method, grid[i].seed, root);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // deterministic report order regardless of scheduling
  std::stable_sort(results.begin(), results.end(),
                   [](const CellReport& a, const CellReport& b) {
                     if (a.method != b.method) return a.method < b.method;
                     return a.seed < b.seed;
                   });
  report.cells = std::move(results);

  write_aggregate_summary(cfg, report.cells, root);
  write_manifest(cfg, report.cells, root);
  return report;
}

int experiment_exit_code(const ExperimentReport& report) {
  return report.all_ok() ? 0 : 1;
}

void write_stream_files(const RunConfig& cfg, std::uint64_t seed,
                        const std::string& out_dir) {
  const StreamData stream = build_stream(cfg, seed);
  const Evaluator eval;
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  const auto write_set = [](const LabeledSet& data, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_stream_files: cannot open " + path.string());
    for (std::size_t r = 0; r < data.size(); ++r) {
      for (std::size_t c = 0; c < data.features.cols; ++c) {
        out << format_real(data.features(r, c)) << ",";
      }
      out << data.labels[r] << "\n";
    }
  };

  write_set(stream.gold, dir / "gold.csv");
  for (const auto& seg : stream.segments) {
    char name[64];
    std::snprintf(name, sizeof(name), "seg_%03d_unlabeled.csv", seg.time_index);
    write_set(eval.oracle_labeled_pool(seg), dir / name);
    std::snprintf(name, sizeof(name), "seg_%03d_test.csv", seg.time_index);
    write_set(eval.oracle_test_set(seg), dir / name);
  }

  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  meta << "seed " << seed << "\n"
       << "segments " << stream.segments.size() << "\n"
       << "gold_rows " << stream.gold.size() << "\n"
       << "dropped_rows " << stream.dropped_rows << "\n"
       << "format features...,label (final integer column)\n";
}

}  // namespace driftlearn
