#include "driftlearn/replay.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "driftlearn/eval.hpp"
#include "driftlearn/rng.hpp"
#include "driftlearn/training.hpp"

namespace driftlearn {

SubspaceMemory build_subspace(const MlpClassifier& model, const LabeledSet& sample,
                              double energy) {
  SubspaceMemory mem;
  mem.energy = energy;
  if (sample.size() == 0) {
    mem.bases = {RealMatrix(model.input_dim, 0), RealMatrix(model.hidden_dim, 0),
                 RealMatrix(model.embed_dim, 0)};
    return mem;
  }
  const BatchActivations acts = forward_batch(model, sample.features);
  // column-per-sample activation matrices
  mem.bases.push_back(energy_basis(transpose(sample.features), energy));
  mem.bases.push_back(energy_basis(transpose(acts.hidden), energy));
  mem.bases.push_back(energy_basis(transpose(acts.embeddings), energy));
  return mem;
}

GradientSet project_onto_memory(const SubspaceMemory& mem, const GradientSet& g) {
  GradientSet p;
  p.w1 = RealMatrix(g.w1.rows, g.w1.cols);
  p.b1.assign(g.b1.size(), 0.0);
  p.w2 = RealMatrix(g.w2.rows, g.w2.cols);
  p.b2.assign(g.b2.size(), 0.0);
  p.w3 = RealMatrix(g.w3.rows, g.w3.cols);
  p.b3.assign(g.b3.size(), 0.0);
  if (mem.bases.empty()) return p;
  if (mem.bases.size() != 3) {
    throw std::invalid_argument("project_onto_memory: expected one basis per layer");
  }

  const auto project_rows = [](const RealMatrix& grad, const RealMatrix& basis,
                               RealMatrix& out) {
    if (basis.cols == 0) return;
    if (basis.rows != grad.cols) {
      throw std::invalid_argument("project_onto_memory: basis dimension mismatch");
    }
    for (std::size_t r = 0; r < grad.rows; ++r) {
      const std::vector<double> proj = project(grad.row(r), basis);
      for (std::size_t c = 0; c < grad.cols; ++c) out(r, c) = proj[c];
    }
  };
  project_rows(g.w1, mem.bases[0], p.w1);
  project_rows(g.w2, mem.bases[1], p.w2);
  project_rows(g.w3, mem.bases[2], p.w3);
  return p;
}

namespace {

std::vector<double> flatten_gradients(const GradientSet& g) {
  std::vector<double> flat;
  flat.reserve(g.w1.data.size() + g.b1.size() + g.w2.data.size() + g.b2.size() +
               g.w3.data.size() + g.b3.size());
  flat.insert(flat.end(), g.w1.data.begin(), g.w1.data.end());
  flat.insert(flat.end(), g.b1.begin(), g.b1.end());
  flat.insert(flat.end(), g.w2.data.begin(), g.w2.data.end());
  flat.insert(flat.end(), g.b2.begin(), g.b2.end());
  flat.insert(flat.end(), g.w3.data.begin(), g.w3.data.end());
  flat.insert(flat.end(), g.b3.begin(), g.b3.end());
  return flat;
}

LossGrad loss_at_perturbed(const MlpClassifier& model, std::span<const double> xi,
                           const RealMatrix& xs, std::span<const int> ys) {
  if (xi.size() != parameter_count(model)) {
    throw std::invalid_argument("perturbation length does not match the model");
  }
  MlpClassifier shifted = model;
  std::vector<double> theta = flatten(model);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += xi[i];
  unflatten(shifted, theta);
  return ce_loss_and_grad(shifted, xs, ys);
}

}  // namespace

void xi_step(std::vector<double>& xi, const MlpClassifier& model,
             const RealMatrix& xs, std::span<const int> ys,
             const SubspaceMemory& mem, double eta1) {
  if (eta1 <= 0.0) throw std::invalid_argument("xi_step: eta1 must be positive");
  const LossGrad lg = loss_at_perturbed(model, xi, xs, ys);
  const GradientSet inside = project_onto_memory(mem, lg.grads);
  const std::vector<double> flat = flatten_gradients(inside);
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] += eta1 * flat[i];
}

double theta_step(MlpClassifier& model, std::span<const double> xi,
                  const RealMatrix& xs, std::span<const int> ys,
                  const SubspaceMemory& mem, double eta2) {
  if (eta2 <= 0.0) throw std::invalid_argument("theta_step: eta2 must be positive");
  LossGrad lg = loss_at_perturbed(model, xi, xs, ys);
  const GradientSet inside = project_onto_memory(mem, lg.grads);
  add_scaled(lg.grads, inside, -1.0);  // (I - Proj_M) grad
  apply_step(model, lg.grads, eta2);
  return lg.loss;
}

SubspaceMemory replay_train(MlpClassifier& model, const LabeledSet& gold,
                            const LabeledSet& pseudo, const SubspaceMemory& mem,
                            const ReplayConfig& cfg) {
  if (pseudo.size() > cfg.lookback) {
    throw std::invalid_argument("replay_train: pseudo set exceeds the lookback bound");
  }
  const LabeledSet combined = concat(gold, pseudo);
  Rng rng(derive_seed(cfg.seed, "replay"));

  if (combined.size() > 0) {
    std::vector<double> xi(parameter_count(model), 0.0);
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto batches = epoch_batches(combined.size(), cfg.batch_size, rng);
      double sum = 0.0;
      for (const auto& idx : batches) {
        const LabeledSet batch = take_rows(combined, idx);
        sum += theta_step(model, xi, batch.features, batch.labels, mem, cfg.eta2);
        xi_step(xi, model, batch.features, batch.labels, mem, cfg.eta1);
      }
      const double mean_loss = sum / static_cast<double>(batches.size());
      if (std::isfinite(prev_loss)) {
        const double improvement =
            (prev_loss - mean_loss) / std::max(std::fabs(prev_loss), 1e-12);
        if (improvement < cfg.plateau_tolerance) break;
      }
      prev_loss = mean_loss;
    }
  }

  const LabeledSet sample = subsample(combined, cfg.subspace_sample_cap, rng);
  SubspaceMemory next = build_subspace(model, sample, cfg.subspace_energy);
  next.time_index = mem.time_index + 1;
  return next;
}

std::vector<ProbePoint> flatness_probe(const MlpClassifier& model,
                                       const LabeledSet& test,
                                       std::span<const double> bounds,
                                       std::size_t draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("flatness_probe: draws must be >= 1");
  for (const double b : bounds) {
    if (b < 0.0 || !std::isfinite(b)) {
      throw std::invalid_argument("flatness_probe: bounds must be non-negative");
    }
  }
  if (test.size() == 0) throw std::invalid_argument("flatness_probe: empty test set");

  const std::vector<double> theta = flatten(model);
  Rng rng(derive_seed(seed, "probe"));
  MlpClassifier probe_model = model;

  std::vector<ProbePoint> points;
  points.reserve(bounds.size());
  for (const double b : bounds) {
    if (b == 0.0) {
      // no perturbation: the clean accuracy, exactly
      const std::vector<int> preds = predict(model, test.features);
      points.push_back({0.0, accuracy(preds, test.labels), 0.0});
      continue;
    }
    std::vector<double> accs(draws, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
      std::vector<double> noisy = theta;
      for (auto& v : noisy) v += rng.uniform(-b, b);
      unflatten(probe_model, noisy);
      const std::vector<int> preds = predict(probe_model, test.features);
      accs[d] = accuracy(preds, test.labels);
    }
    const Aggregate agg = aggregate(accs);
    points.push_back({b, agg.mean, agg.stddev});
  }
  return points;
}

void write_probe_csv(std::span<const ProbePoint> points, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_probe_csv: cannot open " + path);
  out << "b,mean_acc,std_acc\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.bound, p.mean_accuracy,
                  p.std_accuracy);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_probe_csv: write failed for " + path);
}

}  // namespace driftlearn
