#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlearn/config.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

struct CellReport {
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double acc_t = 0.0;
  double acc_T = 0.0;
  double mean_pseudo_accuracy = 0.0;  // 0 when the method does not label
  std::vector<std::string> artifacts;  // paths relative to the output root
};

struct ExperimentReport {
  std::string out_root;
  std::vector<CellReport> cells;  // sorted by (method, seed)
  bool all_ok() const {
    for (const auto& c : cells) {
      if (!c.ok) return false;
    }
    return true;
  }
};

// Builds the stream for one seed from the config: a synthetic drift stream,
// or a CSV table reordered along its first principal component and cut into
// slots. Exposed for tests and the stream-generation verb.
StreamData build_stream(const RunConfig& cfg, std::uint64_t seed);

// Executes the (method x seed) grid, writing per-cell artifacts under
// <out>/<dataset>/<method>/seed<k>/, an aggregate summary per dataset, and
// a manifest covering everything. The DRIFTLEARN_OUT environment variable
// overrides the configured output root.
ExperimentReport run_experiment(const RunConfig& cfg);

// Exit status for the CLI: 0 all cells ok, 1 partial failure.
int experiment_exit_code(const ExperimentReport& report);

// Writes gold.csv, per-segment CSVs, and a meta file describing the stream.
void write_stream_files(const RunConfig& cfg, std::uint64_t seed,
                        const std::string& out_dir);

// Output root after the environment override.
std::string resolve_out_root(const RunConfig& cfg);

}  // namespace driftlearn
