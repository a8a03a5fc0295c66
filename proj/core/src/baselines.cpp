#include "driftlearn/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "driftlearn/pseudo_label.hpp"
#include "driftlearn/replay.hpp"
#include "driftlearn/rng.hpp"
#include "driftlearn/training.hpp"

namespace driftlearn {

namespace {

MlpClassifier fresh_model(const LabeledSet& gold, const PipelineConfig& cfg,
                          std::uint64_t seed) {
  std::size_t classes = 0;
  for (const int y : gold.labels) {
    classes = std::max(classes, static_cast<std::size_t>(y) + 1);
  }
  if (classes < 2) classes = 2;
  return make_mlp(gold.features.cols, cfg.hidden_dim, cfg.embed_dim, classes,
                  derive_seed(seed, "init"));
}

void fill_row(AccMatrix& r, std::size_t step, const MlpClassifier& model,
              const std::vector<StreamSegment>& segments, const Evaluator& eval) {
  std::vector<double> row(step);
  for (std::size_t j = 0; j < step; ++j) {
    row[j] = eval.test_accuracy(model, segments[j]);
  }
  r.rows.push_back(std::move(row));
}

// lookback-many most confident (prediction, sample) pairs; ties at the
// cutoff keep the earlier index
LabeledSet confident_subset(const MlpClassifier& model, const RealMatrix& xs,
                            const std::vector<int>& labels, std::size_t keep) {
  const BatchActivations acts = forward_batch(model, xs);
  std::vector<double> confidence(xs.rows);
  for (std::size_t r = 0; r < xs.rows; ++r) {
    const std::vector<double> p = softmax(acts.logits.row(r));
    confidence[r] = *std::max_element(p.begin(), p.end());
  }
  std::vector<std::size_t> order(xs.rows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return confidence[a] > confidence[b];
  });
  if (order.size() > keep) order.resize(keep);

  LabeledSet out;
  out.features = take_rows(xs, order);
  out.labels.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.labels[i] = labels[order[i]];
  return out;
}

}  // namespace

RunOutcome run_st(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                  const Evaluator& eval, const PipelineConfig& cfg,
                  std::uint64_t seed) {
  RunOutcome out;
  out.final_model = fresh_model(gold, cfg, seed);
  Rng rng(derive_seed(seed, "st-train"));
  train_epochs(out.final_model, gold, cfg.pretrain_epochs, cfg.learning_rate,
               cfg.batch_size, rng);

  std::vector<double> per_segment(segments.size());
  for (std::size_t j = 0; j < segments.size(); ++j) {
    per_segment[j] = eval.test_accuracy(out.final_model, segments[j]);
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out.R.rows.emplace_back(per_segment.begin(),
                            per_segment.begin() + static_cast<std::ptrdiff_t>(i + 1));
  }
  return out;
}

RunOutcome run_jt(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                  const Evaluator& eval, const PipelineConfig& cfg,
                  std::uint64_t seed) {
  RunOutcome out;
  LabeledSet seen = gold;
  for (std::size_t t = 0; t < segments.size(); ++t) {
    seen = concat(seen, eval.oracle_labeled_pool(segments[t]));
    MlpClassifier model = fresh_model(gold, cfg, seed);
    Rng rng(derive_seed(derive_seed(seed, "jt-train"), t));
    train_epochs(model, seen, cfg.pretrain_epochs, cfg.learning_rate, cfg.batch_size,
                 rng);
    fill_row(out.R, t + 1, model, segments, eval);
    if (t + 1 == segments.size()) out.final_model = std::move(model);
  }
  return out;
}

RunOutcome run_pl_conf(const LabeledSet& gold,
                       const std::vector<StreamSegment>& segments,
                       const Evaluator& eval, const PipelineConfig& cfg,
                       std::uint64_t seed) {
  RunOutcome out;
  out.final_model = fresh_model(gold, cfg, seed);
  Rng rng(derive_seed(seed, "pl-train"));
  train_epochs(out.final_model, gold, cfg.pretrain_epochs, cfg.learning_rate,
               cfg.batch_size, rng);

  for (std::size_t t = 0; t < segments.size(); ++t) {
    const RealMatrix& xs = segments[t].unlabeled;
    const std::vector<int> labels = predict(out.final_model, xs);
    out.pseudo_accuracy.push_back(eval.pseudo_label_accuracy(labels, segments[t]));

    const LabeledSet buffer = confident_subset(out.final_model, xs, labels,
                                               cfg.lookback);
    const LabeledSet data = concat(gold, buffer);
    train_epochs(out.final_model, data, cfg.adapt_epochs, cfg.learning_rate,
                 cfg.batch_size, rng);
    fill_row(out.R, t + 1, out.final_model, segments, eval);
  }
  return out;
}

RunOutcome run_ours(const LabeledSet& gold, const std::vector<StreamSegment>& segments,
                    const Evaluator& eval, const PipelineConfig& cfg,
                    std::uint64_t seed) {
  RunOutcome out;
  out.final_model = fresh_model(gold, cfg, seed);
  MlpClassifier& model = out.final_model;

  Rng rng(derive_seed(seed, "ours-train"));
  train_epochs(model, gold, cfg.pretrain_epochs, cfg.learning_rate, cfg.batch_size,
               rng);

  // fixed label semantics from the gold prototypes
  const RealMatrix gold_emb = normalized_embeddings(model, gold.features);
  RealMatrix onehot(gold.size(), model.class_count);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    onehot(i, static_cast<std::size_t>(gold.labels[i])) = 1.0;
  }
  const CentroidSet gold_centroids = centroids_from_probabilities(gold_emb, onehot);
  const LabelEmbedding label_emb =
      gold_label_embedding(gold_centroids.u, cfg.label_energy);

  SubspaceMemory mem;
  if (cfg.use_subspace) {
    const LabeledSet sample = subsample(gold, cfg.subspace_sample_cap, rng);
    mem = build_subspace(model, sample, cfg.subspace_energy);
  }

  LabeledSet buffer;  // most recent pseudo-labeled pairs, <= lookback
  for (std::size_t t = 0; t < segments.size(); ++t) {
    const RealMatrix& xs = segments[t].unlabeled;

    std::vector<int> labels;
    if (cfg.generation == PipelineConfig::Generation::Robust) {
      GenerationConfig gen;
      gen.train_epochs = cfg.gen_epochs;
      gen.learning_rate = cfg.learning_rate;
      gen.batch_size = cfg.batch_size;
      gen.max_cluster_iters = cfg.cluster_iters;
      gen.converge_fraction = cfg.converge_fraction;
      gen.ils_weight = cfg.ils_weight;
      gen.lookback = cfg.lookback;
      gen.seed = derive_seed(derive_seed(seed, "generation"), t);
      gen.mt_weight = cfg.mt_weight;
      gen.mt_momentum = cfg.mt_momentum;
      labels = generate_pseudo_labels(model, gold, buffer, xs, label_emb, gen).labels;
    } else {
      labels = predict(model, xs);
    }
    out.pseudo_accuracy.push_back(eval.pseudo_label_accuracy(labels, segments[t]));

    if (cfg.generation == PipelineConfig::Generation::Confidence) {
      buffer = confident_subset(model, xs, labels, cfg.lookback);
    } else {
      LabeledSet pairs;
      pairs.features = xs;
      pairs.labels = labels;
      Rng buffer_rng(derive_seed(derive_seed(seed, "buffer"), t));
      buffer = subsample(pairs, cfg.lookback, buffer_rng);
    }

    ReplayConfig rep;
    rep.epochs = cfg.adapt_epochs;
    rep.batch_size = cfg.batch_size;
    rep.eta1 = cfg.eta1;
    rep.eta2 = cfg.eta2;
    rep.plateau_tolerance = cfg.plateau_tolerance;
    rep.subspace_energy = cfg.subspace_energy;
    rep.subspace_sample_cap = cfg.subspace_sample_cap;
    rep.lookback = cfg.lookback;
    rep.seed = derive_seed(derive_seed(seed, "replay"), t);

    const SubspaceMemory next =
        replay_train(model, gold, buffer, cfg.use_subspace ? mem : SubspaceMemory{},
                     rep);
    if (cfg.use_subspace) mem = next;

    fill_row(out.R, t + 1, model, segments, eval);
  }
  return out;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods{
      "st", "jt", "pl_conf", "ours", "ours_wo_ils", "ours_wo_fr", "ours_pl"};
  return methods;
}

bool is_known_method(const std::string& name) {
  const auto& m = known_methods();
  return std::find(m.begin(), m.end(), name) != m.end();
}

RunOutcome run_method(const std::string& name, const LabeledSet& gold,
                      const std::vector<StreamSegment>& segments,
                      const Evaluator& eval, const PipelineConfig& cfg,
                      std::uint64_t seed) {
  if (name == "st") return run_st(gold, segments, eval, cfg, seed);
  if (name == "jt") return run_jt(gold, segments, eval, cfg, seed);
  if (name == "pl_conf") return run_pl_conf(gold, segments, eval, cfg, seed);
  if (name == "ours") return run_ours(gold, segments, eval, cfg, seed);
  if (name == "ours_wo_ils") {
    PipelineConfig ablated = cfg;
    ablated.ils_weight = 0.0;
    return run_ours(gold, segments, eval, ablated, seed);
  }
  if (name == "ours_wo_fr") {
    PipelineConfig ablated = cfg;
    ablated.use_subspace = false;
    return run_ours(gold, segments, eval, ablated, seed);
  }
  if (name == "ours_pl") {
    PipelineConfig variant = cfg;
    variant.generation = PipelineConfig::Generation::Confidence;
    return run_ours(gold, segments, eval, variant, seed);
  }
  throw std::invalid_argument("run_method: unknown method '" + name + "'");
}

}  // namespace driftlearn
