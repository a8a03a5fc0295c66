#include "driftlearn/training.hpp"

#include <numeric>
#include <stdexcept>

namespace driftlearn {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("epoch_batches: zero batch size");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.features.cols != b.features.cols) {
    throw std::invalid_argument("concat: feature width mismatch");
  }
  LabeledSet out;
  out.features = RealMatrix(a.size() + b.size(), a.features.cols);
  out.labels.reserve(a.size() + b.size());
  std::copy(a.features.data.begin(), a.features.data.end(), out.features.data.begin());
  std::copy(b.features.data.begin(), b.features.data.end(),
            out.features.data.begin() + static_cast<std::ptrdiff_t>(a.features.data.size()));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

RealMatrix take_rows(const RealMatrix& m, std::span<const std::size_t> idx) {
  RealMatrix out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t c = 0; c < m.cols; ++c) out(i, c) = m(idx[i], c);
  }
  return out;
}

LabeledSet take_rows(const LabeledSet& data, std::span<const std::size_t> idx) {
  LabeledSet out;
  out.features = take_rows(data.features, idx);
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.labels[i] = data.labels[idx[i]];
  return out;
}

LabeledSet subsample(const LabeledSet& data, std::size_t cap, Rng& rng) {
  if (data.size() <= cap) return data;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  order.resize(cap);
  return take_rows(data, order);
}

double train_epochs(MlpClassifier& model, const LabeledSet& data, int epochs,
                    double learning_rate, std::size_t batch_size, Rng& rng,
                    MeanTeacher* teacher) {
  if (data.size() == 0 || epochs <= 0) return 0.0;
  double last_epoch_loss = 0.0;
  for (int e = 0; e < epochs; ++e) {
    const auto batches = epoch_batches(data.size(), batch_size, rng);
    double sum = 0.0;
    for (const auto& idx : batches) {
      const LabeledSet batch = take_rows(data, idx);
      LossGrad lg = ce_loss_and_grad(model, batch.features, batch.labels);
      if (teacher && teacher->weight > 0.0) {
        const LossGrad cons =
            consistency_loss_and_grad(model, teacher->model, batch.features);
        add_scaled(lg.grads, cons.grads, teacher->weight);
        lg.loss += teacher->weight * cons.loss;
      }
      apply_step(model, lg.grads, learning_rate);
      if (teacher && teacher->weight > 0.0) {
        ema_update(teacher->model, model, teacher->momentum);
      }
      sum += lg.loss;
    }
    last_epoch_loss = sum / static_cast<double>(batches.size());
  }
  return last_epoch_loss;
}

}  // namespace driftlearn
