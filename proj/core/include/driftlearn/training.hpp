#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "driftlearn/model.hpp"
#include "driftlearn/rng.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

// Seeded epoch schedule: a shuffled index range cut into contiguous
// minibatches. Shared by every training loop so that two loops given the
// same generator state visit identical batches.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    Rng& rng);

LabeledSet concat(const LabeledSet& a, const LabeledSet& b);
LabeledSet take_rows(const LabeledSet& data, std::span<const std::size_t> idx);
RealMatrix take_rows(const RealMatrix& m, std::span<const std::size_t> idx);

// Uniform subsample without replacement; returns the input when n <= cap.
LabeledSet subsample(const LabeledSet& data, std::size_t cap, Rng& rng);

// Optional mean-teacher companion: adds weight * consistency gradients to
// each step and tracks the student with an exponential moving average.
struct MeanTeacher {
  MlpClassifier model;
  double weight = 0.0;
  double momentum = 0.99;
};

// Plain minibatch gradient descent on the cross-entropy loss.
// Returns the mean batch loss of the last epoch.
double train_epochs(MlpClassifier& model, const LabeledSet& data, int epochs,
                    double learning_rate, std::size_t batch_size, Rng& rng,
                    MeanTeacher* teacher = nullptr);

}  // namespace driftlearn
