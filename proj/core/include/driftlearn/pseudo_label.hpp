#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftlearn/linalg.hpp"
#include "driftlearn/model.hpp"
#include "driftlearn/stream.hpp"

namespace driftlearn {

// Per-class prototype matrix: column c is the prototype of class c over
// unit-normalized embeddings, plus how many points currently back it.
struct CentroidSet {
  RealMatrix u;                       // embed_dim x class_count
  std::vector<std::size_t> counts;    // per class

  std::size_t class_count() const { return u.cols; }
};

// Fixed label-semantics factor learned once from the gold prototypes:
// the top-r right singular basis of the gold centroid matrix. Projecting
// evolving prototypes onto it keeps class semantics anchored over time.
struct LabelEmbedding {
  std::size_t rank = 0;
  RealMatrix right_basis;   // class_count x rank, orthonormal columns
  RealMatrix label_factor;  // rank x class_count (the basis transposed)
};

// Rows of `embeddings` scaled to unit norm; throws on near-zero rows.
RealMatrix normalized_embeddings(const MlpClassifier& model, const RealMatrix& xs);

// Soft-assignment initialization: prototype c is the softmax-weighted mean
// of the normalized embeddings, weight = predicted probability of class c.
// Classes with negligible total mass fall back to the global mean, count 0.
CentroidSet init_centroids(const MlpClassifier& model, const RealMatrix& xs);

// Kernel behind init_centroids, exposed for direct verification.
CentroidSet centroids_from_probabilities(const RealMatrix& embeddings,
                                         const RealMatrix& probabilities);

// Nearest prototype under cosine distance; ties go to the lowest class.
std::vector<int> assign_labels(const CentroidSet& centroids,
                               const RealMatrix& embeddings);

// Hard-assignment update: prototype c becomes the mean of its members;
// empty classes keep the previous prototype with count 0.
CentroidSet update_centroids(const RealMatrix& embeddings,
                             std::span<const int> labels, const CentroidSet& prev);

// Top-r right singular basis of the gold prototype matrix; r is the
// energy cutoff (at least 1). Fixed for the lifetime of a run.
LabelEmbedding gold_label_embedding(const RealMatrix& gold_centroids, double energy);

// Projects each prototype row pattern onto the gold label subspace:
// returns U B B^T, the closed-form minimizer of |U - H^T V| over H with the
// label factor V fixed (the alternating update collapses because V has
// orthonormal rows).
RealMatrix refine_centroids(const RealMatrix& u, const LabelEmbedding& emb);

struct GenerationConfig {
  int train_epochs = 5;            // supervised pass on gold + lookback pairs
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  int max_cluster_iters = 10;
  double converge_fraction = 1e-3; // stop when fewer assignments change
  double ils_weight = 0.1;         // 0 disables the label-semantics refinement
  std::size_t lookback = 100;
  std::uint64_t seed = 1;
  // mean-teacher companion (off by default)
  double mt_weight = 0.0;
  double mt_momentum = 0.99;
  std::string debug_dump_path;     // per-iteration centroids + change counts
};

struct GenerationResult {
  std::vector<int> labels;         // one label in [0, C) per unlabeled row
  int iterations_run = 0;
  double final_loss = 0.0;
};

// One generation round: refresh the model on gold + lookback pairs, cluster
// the new slot's embeddings around prediction-seeded prototypes with
// label-semantics refinement, and take joint descent steps on the
// supervised and pseudo-label losses. Returns labels for every row of xs
// and mutates the model in place.
GenerationResult generate_pseudo_labels(MlpClassifier& model, const LabeledSet& gold,
                                        const LabeledSet& prev_pseudo,
                                        const RealMatrix& xs,
                                        const LabelEmbedding& emb,
                                        const GenerationConfig& cfg);

}  // namespace driftlearn
