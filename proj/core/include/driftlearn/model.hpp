#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlearn/linalg.hpp"

namespace driftlearn {

// Two-layer perceptron encoder with a linear classification head:
//   f(x) = W2 * relu(W1 * x + b1) + b2      (embedding, linear output)
//   h(x) = W3 * f(x) + b3                   (logits)
//
// Flattened parameter order (used by checkpoints, perturbations and
// subspace projections): w1 row-major, b1, w2 row-major, b2, w3 row-major, b3.
struct MlpClassifier {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t embed_dim = 0;
  std::size_t class_count = 0;

  RealMatrix w1;            // hidden x input
  std::vector<double> b1;   // hidden
  RealMatrix w2;            // embed x hidden
  std::vector<double> b2;   // embed
  RealMatrix w3;            // classes x embed
  std::vector<double> b3;   // classes
};

// One tensor per parameter tensor, congruent shapes.
struct GradientSet {
  RealMatrix w1;
  std::vector<double> b1;
  RealMatrix w2;
  std::vector<double> b2;
  RealMatrix w3;
  std::vector<double> b3;
};

// Seeded uniform init in +-sqrt(6/(fan_in+fan_out)), zero biases.
MlpClassifier make_mlp(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t embed_dim, std::size_t class_count,
                       std::uint64_t seed);

GradientSet zero_gradients(const MlpClassifier& model);

struct ForwardResult {
  std::vector<double> embedding;
  std::vector<double> logits;
};
ForwardResult forward(const MlpClassifier& model, std::span<const double> x);

// Row-wise batch forward; keeps the per-layer inputs that the subspace
// builder samples (layer-1 input is the batch itself).
struct BatchActivations {
  RealMatrix hidden;      // n x hidden, relu(W1 x + b1); input to layer 2
  RealMatrix embeddings;  // n x embed; input to the head
  RealMatrix logits;      // n x classes
};
BatchActivations forward_batch(const MlpClassifier& model, const RealMatrix& xs);

// Max-shifted softmax: positive entries summing to 1, shift invariant.
std::vector<double> softmax(std::span<const double> z);

std::vector<int> predict(const MlpClassifier& model, const RealMatrix& xs);

struct LossGrad {
  double loss = 0.0;
  GradientSet grads;
};

// Mean cross-entropy over the batch with exact analytic gradients.
LossGrad ce_loss_and_grad(const MlpClassifier& model, const RealMatrix& xs,
                          std::span<const int> ys);

// Mean-teacher consistency: mean over the batch of the per-logit squared
// difference between student and teacher logits; gradients for the student.
LossGrad consistency_loss_and_grad(const MlpClassifier& student,
                                   const MlpClassifier& teacher,
                                   const RealMatrix& xs);

// theta <- theta - lr * g, elementwise.
void apply_step(MlpClassifier& model, const GradientSet& grads, double lr);

// g += scale * h
void add_scaled(GradientSet& g, const GradientSet& h, double scale);

std::size_t parameter_count(const MlpClassifier& model);
std::vector<double> flatten(const MlpClassifier& model);
void unflatten(MlpClassifier& model, std::span<const double> params);

// teacher <- momentum * teacher + (1 - momentum) * student
void ema_update(MlpClassifier& teacher, const MlpClassifier& student,
                double momentum);

// Checkpoint format, byte-exact:
//   4 x uint32 little-endian: input_dim, hidden_dim, embed_dim, class_count
//   parameter_count x float64 little-endian in flattened order.
void save_checkpoint(const MlpClassifier& model, const std::string& path);
MlpClassifier load_checkpoint(const std::string& path);

}  // namespace driftlearn
