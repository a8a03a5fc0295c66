#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlearn/model.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

// Lower-triangular accuracy matrix. rows[i][j] holds the accuracy on
// segment j+1's test split of the model state after adapting through
// segment i+1, for j <= i.
struct AccMatrix {
  std::vector<std::vector<double>> rows;

  std::size_t steps() const { return rows.size(); }
};

// Fraction of exact matches; throws on empty or mismatched inputs.
double accuracy(std::span<const int> preds, std::span<const int> truth);

// Mean of the diagonal: adaptation quality.
double acc_t(const AccMatrix& r);

// Mean of the final row: memorization quality.
double acc_T(const AccMatrix& r);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};
Aggregate aggregate(std::span<const double> values);

void write_acc_matrix_csv(const AccMatrix& r, const std::string& path);

struct SummaryRecord {
  std::string run_id;
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  double acc_t = 0.0;
  double acc_T = 0.0;
};
void write_summary(const SummaryRecord& record, const std::string& path);

// The only component allowed to unwrap SegmentTruth. Adaptation pipelines
// receive a const reference and can obtain scalar scores; extracting
// labeled training data is an oracle privilege that is counted, so tests
// can assert that only the joint-training oracle uses it.
class Evaluator {
 public:
  // Accuracy of the model on the segment's hidden test labels.
  double test_accuracy(const MlpClassifier& model, const StreamSegment& seg) const;

  // Accuracy of proposed labels for the unlabeled pool (evaluation only).
  double pseudo_label_accuracy(std::span<const int> labels,
                               const StreamSegment& seg) const;

  // Ground-truth labeled pool for oracle training; bumps oracle_reads().
  LabeledSet oracle_labeled_pool(const StreamSegment& seg) const;

  // Test split with its labels, for probes and diagnostics; bumps oracle_reads().
  LabeledSet oracle_test_set(const StreamSegment& seg) const;

  int oracle_reads() const { return oracle_reads_; }

 private:
  mutable int oracle_reads_ = 0;
};

}  // namespace driftlearn
