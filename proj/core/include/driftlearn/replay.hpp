#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlearn/linalg.hpp"
#include "driftlearn/model.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

// Orthonormal bases spanning the directions that mattered to previously
// seen data, one basis per linear layer over that layer's input space.
// Weight gradients of a linear layer live in the outer-product span of its
// inputs, so an input-activation basis captures exactly the directions
// whose change moves outputs on old data. Biases carry no input direction
// and belong to no basis.
struct SubspaceMemory {
  std::vector<RealMatrix> bases;  // [layer-1 input, layer-2 input, head input]
  double energy = 0.0;
  int time_index = 0;

  bool empty() const {
    for (const auto& b : bases) {
      if (b.cols > 0) return false;
    }
    return true;
  }
};

// Energy-thresholded activation bases over a sample of previously seen
// labeled data. An empty sample yields all-empty bases.
SubspaceMemory build_subspace(const MlpClassifier& model, const LabeledSet& sample,
                              double energy);

// Projects a gradient set onto the memory: weight rows onto their layer
// basis, biases to zero. An empty memory projects everything to zero.
GradientSet project_onto_memory(const SubspaceMemory& mem, const GradientSet& g);

// Adversarial ascent of the perturbation inside the memory span:
//   xi <- xi + eta1 * Proj_M(grad L(theta + xi)) on the batch.
void xi_step(std::vector<double>& xi, const MlpClassifier& model,
             const RealMatrix& xs, std::span<const int> ys,
             const SubspaceMemory& mem, double eta1);

// Descent of the parameters orthogonal to the memory span:
//   theta <- theta - eta2 * (I - Proj_M)(grad L(theta + xi)).
// Returns the loss at theta + xi on the batch.
double theta_step(MlpClassifier& model, std::span<const double> xi,
                  const RealMatrix& xs, std::span<const int> ys,
                  const SubspaceMemory& mem, double eta2);

struct ReplayConfig {
  int epochs = 20;
  std::size_t batch_size = 64;
  double eta1 = 0.01;
  double eta2 = 0.01;
  double plateau_tolerance = 1e-4;  // relative epoch-loss improvement
  double subspace_energy = 0.90;
  std::size_t subspace_sample_cap = 512;
  std::size_t lookback = 100;
  std::uint64_t seed = 1;
};

// Alternating minimax replay over gold + pseudo-labeled pairs: a theta
// descent step orthogonal to the memory followed by a xi ascent step inside
// it, per minibatch, until the epoch count or a loss plateau. The
// perturbation starts at zero and is discarded; returns the memory rebuilt
// from the data just replayed.
SubspaceMemory replay_train(MlpClassifier& model, const LabeledSet& gold,
                            const LabeledSet& pseudo, const SubspaceMemory& mem,
                            const ReplayConfig& cfg);

struct ProbePoint {
  double bound = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

// Flat-region probe: for each bound b, draws entrywise-uniform [-b, b]
// parameter perturbations, measures test accuracy, restores, and reports
// the mean. The b = 0 entry equals the clean accuracy exactly.
std::vector<ProbePoint> flatness_probe(const MlpClassifier& model,
                                       const LabeledSet& test,
                                       std::span<const double> bounds,
                                       std::size_t draws, std::uint64_t seed);

// CSV with columns b, mean_acc, std_acc.
void write_probe_csv(std::span<const ProbePoint> points, const std::string& path);

}  // namespace driftlearn
