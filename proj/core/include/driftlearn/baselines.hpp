#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlearn/eval.hpp"
#include "driftlearn/model.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

// Knobs shared by every pipeline. The ablations are plain flag changes:
// ils_weight = 0 drops the label-semantics refinement, use_subspace = false
// replays without the flat-region game, generation = Confidence swaps the
// robust generation step for top-confidence selection.
struct PipelineConfig {
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 64;
  double learning_rate = 0.01;
  int pretrain_epochs = 50;
  int adapt_epochs = 20;
  int gen_epochs = 5;
  std::size_t batch_size = 64;
  std::size_t lookback = 100;

  int cluster_iters = 10;
  double converge_fraction = 1e-3;
  double ils_weight = 0.1;
  double label_energy = 0.9;

  double eta1 = 0.01;
  double eta2 = 0.01;
  double plateau_tolerance = 1e-4;
  double subspace_energy = 0.90;
  std::size_t subspace_sample_cap = 512;
  bool use_subspace = true;

  enum class Generation { Robust, Confidence };
  Generation generation = Generation::Robust;

  double mt_weight = 0.0;
  double mt_momentum = 0.99;
};

struct RunOutcome {
  AccMatrix R;
  std::vector<double> pseudo_accuracy;  // per segment, for labeling methods
  MlpClassifier final_model;
};

// Lower bound: one supervised pass over the gold slot, then frozen.
RunOutcome run_st(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                  const Evaluator& eval, const PipelineConfig& cfg,
                  std::uint64_t seed);

// Upper bound: retrains from scratch at every step on gold plus the true
// labels of everything seen so far (the one pipeline allowed oracle reads).
RunOutcome run_jt(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                  const Evaluator& eval, const PipelineConfig& cfg,
                  std::uint64_t seed);

// Self-training on the most confident predictions: keeps the lookback-many
// highest-softmax samples per step and fine-tunes on gold plus that buffer.
RunOutcome run_pl_conf(const LabeledSet& gold,
                       const std::vector<StreamSegment>& segments,
                       const Evaluator& eval, const PipelineConfig& cfg,
                       std::uint64_t seed);

// The generation-replay pipeline: robust pseudo-label generation followed
// by subspace-projected minimax replay, with the ablations wired through
// PipelineConfig flags.
RunOutcome run_ours(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                    const Evaluator& eval, const PipelineConfig& cfg,
                    std::uint64_t seed);

// Registry: st, jt, pl_conf, ours, ours_wo_ils, ours_wo_fr, ours_pl.
const std::vector<std::string>& known_methods();
bool is_known_method(const std::string& name);
RunOutcome run_method(const std::string& name, const LabeledSet& gold,
                      const std::vector<StreamSegment>& segments,
                      const Evaluator& eval, const PipelineConfig& cfg,
                      std::uint64_t seed);

}  // namespace driftlearn
