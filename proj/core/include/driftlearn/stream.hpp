#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlearn/linalg.hpp"

namespace driftlearn {

class Evaluator;  // eval.hpp; the single gatekeeper for ground-truth labels

struct LabeledSet {
  RealMatrix features;      // n x d
  std::vector<int> labels;  // n, dense indices in [0, C)

  std::size_t size() const { return features.rows; }
};

// Ground-truth labels of one stream segment. Adaptation code receives the
// segment but cannot read these fields; only the Evaluator unwraps them.
class SegmentTruth {
 public:
  SegmentTruth() = default;
  SegmentTruth(std::vector<int> test_labels, std::vector<int> unlabeled_labels)
      : test_labels_(std::move(test_labels)),
        unlabeled_labels_(std::move(unlabeled_labels)) {}

  std::size_t test_count() const { return test_labels_.size(); }
  std::size_t unlabeled_count() const { return unlabeled_labels_.size(); }

 private:
  std::vector<int> test_labels_;
  std::vector<int> unlabeled_labels_;
  friend class Evaluator;
};

// One time slot of the stream: an unlabeled training pool and a test split
// whose labels are hidden behind SegmentTruth.
struct StreamSegment {
  int time_index = 0;      // t >= 1
  RealMatrix unlabeled;    // pool the learner may pseudo-label
  RealMatrix test_features;
  SegmentTruth truth;
};

struct StreamData {
  LabeledSet gold;                      // fully labeled slot at t = 0
  std::vector<StreamSegment> segments;  // t = 1..T
  std::size_t dropped_rows = 0;         // trailing remainder below one slot
};

// One Gaussian mode of one class: where it starts and how far its mean
// moves per time step.
struct ModeSpec {
  std::vector<double> start_mean;
  std::vector<double> velocity;  // feature-space distance per step
};

struct DriftSpec {
  std::size_t dims = 2;
  std::size_t class_count = 2;
  std::size_t modes_per_class = 1;
  std::vector<std::vector<ModeSpec>> modes;  // [class][mode]
  double stddev = 1.0;                       // isotropic
  std::size_t instances_per_step = 1000;
  std::size_t steps = 10;  // T, segments after the gold slot
  double test_fraction = 0.3;
  std::uint64_t seed = 1;
};

// Default geometry: class means spread `separation` apart along the first
// axis, drifting with speed `velocity` along the (1,1,0,...) diagonal so the
// stream both leaves the initial region and moves the optimal boundary.
// Multi-modal classes place their modes +-separation/4 apart on the last axis.
DriftSpec make_linear_drift_spec(std::size_t dims, std::size_t class_count,
                                 std::size_t modes_per_class, double separation,
                                 double velocity, double stddev,
                                 std::size_t instances_per_step, std::size_t steps,
                                 double test_fraction, std::uint64_t seed);

// Samples the gold slot and `steps` drifted segments. Deterministic for a
// given spec (the seed is part of the spec).
StreamData generate_drift_stream(const DriftSpec& spec);

// Rows of comma-separated reals with a final integer label column. Labels
// are remapped to dense [0, C) in sorted order; `label_map`, when given,
// receives the original value for each dense index.
LabeledSet load_csv(const std::string& path, bool skip_header = false,
                    std::vector<int>* label_map = nullptr);

// Permutation sorting rows by their score along the first principal
// component (ties by original index); turns a stationary table into a
// gradually drifting covariate stream.
std::vector<std::size_t> induce_drift_order(const LabeledSet& data,
                                            std::uint64_t seed);

LabeledSet apply_order(const LabeledSet& data, std::span<const std::size_t> order);

// First per_step rows become the gold set; each later block of per_step rows
// becomes a segment with a seeded random test/unlabeled split. The trailing
// remainder is dropped and reported via StreamData::dropped_rows.
StreamData segment_stream(const LabeledSet& data, std::size_t per_step,
                          std::size_t test_count, std::uint64_t seed);

}  // namespace driftlearn
