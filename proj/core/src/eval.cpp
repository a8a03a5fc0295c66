#include "driftlearn/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace driftlearn {

double accuracy(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double acc_t(const AccMatrix& r) {
  if (r.rows.empty()) throw std::invalid_argument("acc_t: empty matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.rows[i].size() <= i) {
      throw std::invalid_argument("acc_t: missing diagonal entry");
    }
    sum += r.rows[i][i];
  }
  return sum / static_cast<double>(r.rows.size());
}

double acc_T(const AccMatrix& r) {
  if (r.rows.empty()) throw std::invalid_argument("acc_T: empty matrix");
  const auto& last = r.rows.back();
  if (last.size() != r.rows.size()) {
    throw std::invalid_argument("acc_T: final row not fully populated");
  }
  double sum = 0.0;
  for (const double v : last) sum += v;
  return sum / static_cast<double>(last.size());
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty input");
  Aggregate a;
  for (const double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_acc_matrix_csv(const AccMatrix& r, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_acc_matrix_csv: cannot open " + path);
  out << "step";
  for (std::size_t j = 1; j <= r.rows.size(); ++j) out << ",acc_on_" << j;
  out << "\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    out << (i + 1);
    for (const double v : r.rows[i]) out << "," << format_real(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_acc_matrix_csv: write failed for " + path);
}

void write_summary(const SummaryRecord& rec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_summary: cannot open " + path);
  out << "run_id " << rec.run_id << "\n"
      << "dataset " << rec.dataset << "\n"
      << "method " << rec.method << "\n"
      << "seed " << rec.seed << "\n"
      << "acc_t " << format_real(rec.acc_t) << "\n"
      << "acc_T " << format_real(rec.acc_T) << "\n";
  if (!out) throw std::runtime_error("write_summary: write failed for " + path);
}

double Evaluator::test_accuracy(const MlpClassifier& model,
                                const StreamSegment& seg) const {
  const std::vector<int> preds = predict(model, seg.test_features);
  return accuracy(preds, seg.truth.test_labels_);
}

double Evaluator::pseudo_label_accuracy(std::span<const int> labels,
                                        const StreamSegment& seg) const {
  return accuracy(labels, seg.truth.unlabeled_labels_);
}

LabeledSet Evaluator::oracle_labeled_pool(const StreamSegment& seg) const {
  ++oracle_reads_;
  LabeledSet out;
  out.features = seg.unlabeled;
  out.labels = seg.truth.unlabeled_labels_;
  return out;
}

LabeledSet Evaluator::oracle_test_set(const StreamSegment& seg) const {
  ++oracle_reads_;
  LabeledSet out;
  out.features = seg.test_features;
  out.labels = seg.truth.test_labels_;
  return out;
}

}  // namespace driftlearn
