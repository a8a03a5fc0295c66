#include "driftlearn/pseudo_label.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "driftlearn/rng.hpp"
#include "driftlearn/training.hpp"

namespace driftlearn {

RealMatrix normalized_embeddings(const MlpClassifier& model, const RealMatrix& xs) {
  const BatchActivations acts = forward_batch(model, xs);
  RealMatrix out = acts.embeddings;
  for (std::size_t r = 0; r < out.rows; ++r) {
    const double n = norm(out.row(r));
    if (n <= 1e-12) {
      throw std::invalid_argument(
          "normalized_embeddings: degenerate (near-zero) embedding");
    }
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) /= n;
  }
  return out;
}

CentroidSet centroids_from_probabilities(const RealMatrix& embeddings,
                                         const RealMatrix& probabilities) {
  if (embeddings.rows == 0) {
    throw std::invalid_argument("centroids_from_probabilities: empty segment");
  }
  if (embeddings.rows != probabilities.rows) {
    throw std::invalid_argument("centroids_from_probabilities: row mismatch");
  }
  const std::size_t n = embeddings.rows;
  const std::size_t d = embeddings.cols;
  const std::size_t classes = probabilities.cols;

  std::vector<double> global_mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) global_mean[c] += embeddings(r, c);
  }
  for (auto& v : global_mean) v /= static_cast<double>(n);

  CentroidSet cs;
  cs.u = RealMatrix(d, classes);
  cs.counts.assign(classes, 0);

  // hard prediction counts back each prototype
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (probabilities(r, k) > probabilities(r, best)) best = k;
    }
    ++cs.counts[best];
  }

  for (std::size_t k = 0; k < classes; ++k) {
    double mass = 0.0;
    std::vector<double> acc(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double w = probabilities(r, k);
      mass += w;
      for (std::size_t c = 0; c < d; ++c) acc[c] += w * embeddings(r, c);
    }
    if (mass < 1e-8) {
      for (std::size_t c = 0; c < d; ++c) cs.u(c, k) = global_mean[c];
      cs.counts[k] = 0;
    } else {
      for (std::size_t c = 0; c < d; ++c) cs.u(c, k) = acc[c] / mass;
    }
  }
  return cs;
}

CentroidSet init_centroids(const MlpClassifier& model, const RealMatrix& xs) {
  if (xs.rows == 0) throw std::invalid_argument("init_centroids: empty segment");
  const RealMatrix emb = normalized_embeddings(model, xs);
  const BatchActivations acts = forward_batch(model, xs);
  RealMatrix probs(xs.rows, model.class_count);
  for (std::size_t r = 0; r < xs.rows; ++r) {
    const std::vector<double> p = softmax(acts.logits.row(r));
    for (std::size_t c = 0; c < model.class_count; ++c) probs(r, c) = p[c];
  }
  return centroids_from_probabilities(emb, probs);
}

namespace {

std::vector<int> assign_to_matrix(const RealMatrix& centroids,
                                  const RealMatrix& embeddings) {
  if (centroids.rows != embeddings.cols) {
    throw std::invalid_argument("assign_labels: embedding dimension mismatch");
  }
  const std::size_t classes = centroids.cols;
  std::vector<int> labels(embeddings.rows);
  std::vector<double> centroid(centroids.rows);
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    int best = 0;
    double best_d = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      for (std::size_t c = 0; c < centroids.rows; ++c) centroid[c] = centroids(c, k);
      const double d = cosine_distance(embeddings.row(r), centroid);
      if (k == 0 || d < best_d) {
        best = static_cast<int>(k);
        best_d = d;
      }
    }
    labels[r] = best;
  }
  return labels;
}

double min_column_norm(const RealMatrix& m) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.cols; ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.rows; ++c) s += m(c, k) * m(c, k);
    worst = std::min(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace

std::vector<int> assign_labels(const CentroidSet& centroids,
                               const RealMatrix& embeddings) {
  return assign_to_matrix(centroids.u, embeddings);
}

CentroidSet update_centroids(const RealMatrix& embeddings,
                             std::span<const int> labels, const CentroidSet& prev) {
  if (embeddings.rows != labels.size()) {
    throw std::invalid_argument("update_centroids: label count mismatch");
  }
  const std::size_t classes = prev.class_count();
  for (const int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::invalid_argument("update_centroids: label out of range");
    }
  }
  CentroidSet next;
  next.u = RealMatrix(prev.u.rows, classes);
  next.counts.assign(classes, 0);
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    const auto k = static_cast<std::size_t>(labels[r]);
    ++next.counts[k];
    for (std::size_t c = 0; c < embeddings.cols; ++c) {
      next.u(c, k) += embeddings(r, c);
    }
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (next.counts[k] == 0) {
      for (std::size_t c = 0; c < prev.u.rows; ++c) next.u(c, k) = prev.u(c, k);
    } else {
      const double inv = 1.0 / static_cast<double>(next.counts[k]);
      for (std::size_t c = 0; c < prev.u.rows; ++c) next.u(c, k) *= inv;
    }
  }
  return next;
}

LabelEmbedding gold_label_embedding(const RealMatrix& gold_centroids, double energy) {
  check_finite(gold_centroids, "gold_label_embedding input");
  // right singular vectors of U0 are the left singular vectors of U0^T
  const RealMatrix basis = energy_basis(transpose(gold_centroids), energy);
  if (basis.cols == 0) {
    throw std::invalid_argument("gold_label_embedding: rank-0 centroid matrix");
  }
  LabelEmbedding emb;
  emb.rank = basis.cols;
  emb.right_basis = basis;                  // classes x rank
  emb.label_factor = transpose(basis);      // rank x classes
  return emb;
}

RealMatrix refine_centroids(const RealMatrix& u, const LabelEmbedding& emb) {
  if (u.cols != emb.right_basis.rows) {
    throw std::invalid_argument("refine_centroids: class count mismatch");
  }
  return multiply(multiply(u, emb.right_basis), emb.label_factor);
}

GenerationResult generate_pseudo_labels(MlpClassifier& model, const LabeledSet& gold,
                                        const LabeledSet& prev_pseudo,
                                        const RealMatrix& xs,
                                        const LabelEmbedding& emb,
                                        const GenerationConfig& cfg) {
  if (xs.rows == 0) {
    throw std::invalid_argument("generate_pseudo_labels: empty segment");
  }
  if (prev_pseudo.size() > cfg.lookback) {
    throw std::invalid_argument(
        "generate_pseudo_labels: lookback buffer exceeds the configured size");
  }

  Rng rng(derive_seed(cfg.seed, "generation"));
  const LabeledSet history = concat(gold, prev_pseudo);

  MeanTeacher teacher;
  MeanTeacher* teacher_ptr = nullptr;
  if (cfg.mt_weight > 0.0) {
    teacher.model = model;
    teacher.weight = cfg.mt_weight;
    teacher.momentum = cfg.mt_momentum;
    teacher_ptr = &teacher;
  }

  // supervised refresh on gold + lookback pairs
  train_epochs(model, history, cfg.train_epochs, cfg.learning_rate, cfg.batch_size,
               rng, teacher_ptr);

  CentroidSet centroids = init_centroids(model, xs);

  std::ofstream dump;
  if (!cfg.debug_dump_path.empty()) {
    dump.open(cfg.debug_dump_path, std::ios::trunc);
    dump << "iteration,changed,class,count";
    for (std::size_t c = 0; c < centroids.u.rows; ++c) dump << ",u" << c;
    dump << "\n";
  }
  const auto dump_state = [&](int iteration, std::size_t changed) {
    if (!dump.is_open()) return;
    for (std::size_t k = 0; k < centroids.class_count(); ++k) {
      dump << iteration << "," << changed << "," << k << "," << centroids.counts[k];
      for (std::size_t c = 0; c < centroids.u.rows; ++c) {
        dump << "," << centroids.u(c, k);
      }
      dump << "\n";
    }
  };

  // Prototypes used for assignment: refined onto the gold label subspace
  // unless the refinement collapses a column or is disabled.
  const auto assignment_matrix = [&]() -> RealMatrix {
    if (cfg.ils_weight <= 0.0) return centroids.u;
    RealMatrix refined = refine_centroids(centroids.u, emb);
    if (min_column_norm(refined) <= 1e-12) return centroids.u;
    return refined;
  };

  GenerationResult result;
  std::vector<int> labels;
  const std::size_t n = xs.rows;

  for (int iter = 0; iter < cfg.max_cluster_iters; ++iter) {
    const RealMatrix emb_now = normalized_embeddings(model, xs);
    const std::vector<int> new_labels = assign_to_matrix(assignment_matrix(), emb_now);

    std::size_t changed = n;
    if (!labels.empty()) {
      changed = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != new_labels[i]) ++changed;
      }
    }

    centroids = update_centroids(emb_now, new_labels, centroids);

    // one joint descent step: supervised history loss plus pseudo-label loss
    std::vector<std::size_t> hist_idx(std::min(cfg.batch_size, history.size()));
    for (auto& i : hist_idx) i = rng.uniform_index(history.size());
    const LabeledSet hist_batch = take_rows(history, hist_idx);
    LossGrad step = ce_loss_and_grad(model, hist_batch.features, hist_batch.labels);

    std::vector<std::size_t> seg_idx(std::min(cfg.batch_size, n));
    for (auto& i : seg_idx) i = rng.uniform_index(n);
    const RealMatrix seg_batch = take_rows(xs, seg_idx);
    std::vector<int> seg_labels(seg_idx.size());
    for (std::size_t i = 0; i < seg_idx.size(); ++i) {
      seg_labels[i] = new_labels[seg_idx[i]];
    }
    const LossGrad pl = ce_loss_and_grad(model, seg_batch, seg_labels);
    add_scaled(step.grads, pl.grads, 1.0);
    double total_loss = step.loss + pl.loss;
    if (cfg.ils_weight > 0.0) {
      const RealMatrix refined = refine_centroids(centroids.u, emb);
      double drift = 0.0;
      for (std::size_t i = 0; i < refined.data.size(); ++i) {
        const double diff = centroids.u.data[i] - refined.data[i];
        drift += diff * diff;
      }
      total_loss += cfg.ils_weight * drift;
    }
    apply_step(model, step.grads, cfg.learning_rate);

    labels = new_labels;
    result.iterations_run = iter + 1;
    result.final_loss = total_loss;
    dump_state(iter, changed);

    if (static_cast<double>(changed) <
        cfg.converge_fraction * static_cast<double>(n)) {
      break;
    }
  }

  // final reassignment with the settled prototypes and model
  const RealMatrix emb_final = normalized_embeddings(model, xs);
  if (result.iterations_run > 0) {
    result.labels = assign_to_matrix(assignment_matrix(), emb_final);
  } else {
    result.labels = assign_to_matrix(centroids.u, emb_final);
  }
  return result;
}

}  // namespace driftlearn
